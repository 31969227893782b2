"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_backends.py [--repeat 3]

Each case runs once per backend to warm up (numba compiles on first call),
then reports the best of ``--repeat`` timings and the max abs difference
between backends.
"""

import argparse
import time

import numpy as np

from hyperwave import _accel
from hyperwave import gamma
from hyperwave import kernels as kn
from hyperwave import spherical as sp


def case_loggamma():
    rng = np.random.default_rng(0)
    z = rng.uniform(-20, 20, 200_000) + 1j * rng.uniform(-20, 20, 200_000)
    return lambda: gamma.loggamma(z)


def case_phi_table():
    params = sp.space(3)
    lams = np.linspace(0.0, 8.0, 200)
    rs = np.linspace(0.1, 20.0, 200)
    return lambda: sp.phi_table(params, lams, rs)


def case_phi_quadrature_n4():
    params = sp.space(4)
    lams = np.linspace(0.0, 8.0, 100)
    rs = np.linspace(0.1, 10.0, 40)
    return lambda: np.stack([sp.phi_values(params, lams, r, method="quadrature") for r in rs])


def case_omega0():
    params = sp.space(3)
    wp = kn.WaveParams.default(params, 16.0)
    rs = np.linspace(0.0, 8.0, 50)
    return lambda: kn.omega0_many(params, wp, rs)


CASES = {
    "loggamma 2e5 complex": case_loggamma,
    "phi table 200x200 n=3": case_phi_table,
    "phi quadrature 40x100 n=4": case_phi_quadrature_n4,
    "omega0 50 radii t=16": case_omega0,
}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _accel.numba_available():
        raise SystemExit("numba is not importable")
    print(f"{'case':28s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, make in CASES.items():
        fn = make()
        results = {}
        for flag in (True, False):
            prev = _accel.use_numba(flag)
            try:
                fn()
                results[flag] = best_of(fn, args.repeat)
            finally:
                _accel.use_numba(prev)
        (t_nb, a), (t_np, b) = results[True], results[False]
        diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        print(f"{name:28s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.2f} {diff:10.2e}")


if __name__ == "__main__":
    main()
