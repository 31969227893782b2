"""Kernels and bound quantities on a quotient M = Gamma \\ H^n.

The kernel on M is the orbit sum of the radial kernel on H^n. Sums are
truncated at a radius R and carry an explicit bound for the discarded
terms, built from the empirical radial envelope and the Poincare tail.
"""

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from hyperwave import geometry as geo
from hyperwave import groups as gr
from hyperwave import kernels as kn
from hyperwave.spherical import (
    DivergentTailError,
    phi0,
    radial_nodes,
    spherical_transform,
    volume_density,
)

DELTA_MARGIN = 0.1
RELIABLE_RTOL = 1e-3
RELIABLE_ATOL = 1e-9
SMALL_WINDOW = (1.0 / 64.0, 0.25)
LARGE_WINDOW = (4.0, 64.0)
# spacing of the radial grid used for the empirical envelope constant
ENVELOPE_STEP = 0.5


def default_epsilon(params, delta):
    return 0.5 * (params.rho - delta)


def _check_epsilon(params, delta, eps):
    if not 0.0 < eps < params.rho - delta:
        raise ValueError(f"epsilon = {eps} must lie in (0, rho - delta) = (0, {params.rho - delta})")


def weight_mu(params, delta, r, eps=None):
    """Radial weight e^{(delta + eps) r}."""
    eps = default_epsilon(params, delta) if eps is None else eps
    _check_epsilon(params, delta, eps)
    return np.exp((delta + eps) * np.asarray(r, dtype=float))


@dataclass(frozen=True)
class QuotientKernelValue:
    value: complex
    truncation_radius: float
    tail_bound: float
    reliable: bool
    terms: int

    def __post_init__(self):
        if not self.tail_bound >= 0:  # also rejects nan
            raise ValueError("tail bound must be nonnegative")


def _orbit(group, x, y, radius):
    return gr.orbit_distances(group, x, y, radius)


def envelope_constant(params, distances, values):
    """sup |omega(d)| / ((1 + d) e^{-rho d}) over the sampled distances."""
    d = np.asarray(distances, dtype=float)
    return float(np.max(np.abs(values) / ((1.0 + d) * np.exp(-params.rho * d))))


def envelope_radii(wp, radius, orbit, step=ENVELOPE_STEP, band=kn.LIGHT_CONE_BAND):
    """Grid over [0, R] outside the light-cone band, merged with the orbit distances."""
    grid = np.linspace(0.0, radius, int(math.ceil(radius / step)) + 1)
    grid = grid[np.abs(grid - abs(wp.t)) >= band]
    return np.union1d(grid, orbit)


def kernel_tail_bound(params, group, x, y, radius, c_emp, delta, eps=None):
    """Bound for sum over d(x, w y) > R of C (1 + d) e^{-rho d}.

    Writes the envelope as C (1+d) e^{-(rho-s) d} e^{-s d} with s = delta + eps
    and bounds the first factor by its maximum over d >= R.
    """
    if group.kind == "trivial":
        return 0.0
    eps = default_epsilon(params, delta) if eps is None else eps
    _check_epsilon(params, delta, eps)
    s = delta + eps
    gap = params.rho - s
    d_star = max(radius, 1.0 / gap - 1.0)
    factor = (1.0 + d_star) * math.exp(-gap * d_star)
    _, tail = gr.poincare_partial(group, s, x, y, radius)
    return c_emp * factor * tail


def _require_subcritical(params, delta):
    if delta >= params.rho - DELTA_MARGIN:
        raise ValueError(f"critical exponent estimate {delta:.4f} is not below "
                         f"rho - {DELTA_MARGIN} = {params.rho - DELTA_MARGIN}")


def _assemble(params, group, x, y, radius, dists, vals, ok, c_emp, delta, eps):
    # sum the smallest terms first
    order = np.argsort(-dists)
    value = complex(np.sum(vals[order]))
    tail = kernel_tail_bound(params, group, x, y, radius, c_emp, delta, eps)
    reliable = bool(np.all(ok)) and (tail <= RELIABLE_RTOL * abs(value) or tail <= RELIABLE_ATOL)
    return QuotientKernelValue(value, float(radius), float(tail), reliable, int(dists.size))


def summed_kernel(group, params, wp, x, y, radius, delta=None, eps=None):
    """Orbit sum of the full radial kernel over d(x, w y) <= R."""
    if delta is None:
        delta = gr.critical_exponent(group).value
    _require_subcritical(params, delta)
    dists = _orbit(group, x, y, radius)
    if np.any(np.abs(dists - abs(wp.t)) < kn.LIGHT_CONE_BAND):
        # an orbit point on the wave front: no trustworthy value
        return QuotientKernelValue(complex(math.nan, math.nan), float(radius), math.inf,
                                   False, int(dists.size))
    if group.kind == "trivial":
        rs = np.unique(dists)
    else:
        rs = envelope_radii(wp, radius, dists)
    vals, ok = kn.omega_full_many(params, wp, rs)
    c_emp = envelope_constant(params, rs, vals)
    idx = np.searchsorted(rs, dists)
    return _assemble(params, group, x, y, radius, dists, vals[idx], ok[idx], c_emp, delta, eps)


def kunze_stein_bound(params, psi):
    """A_n int_0^inf |psi(r)| phi_0(r) sinh(r)^(n-1) dr over the grid of psi."""
    return _radial_integral(params, psi.grid, lambda r: np.abs(psi(r)) * phi0(params, r),
                            "kunze-stein")


def _radial_integral(params, grid, integrand, name, rtol=1e-8):
    nodes, weights = radial_nodes(grid)
    vals = integrand(nodes) * volume_density(params, nodes)
    total = float(vals @ weights)
    if not np.any(vals):
        return 0.0
    # exponential rate of the integrand over the last fifth of the grid
    tail_r = grid[grid >= 0.8 * grid[-1]]
    tail_v = integrand(tail_r) * volume_density(params, tail_r)
    positive = tail_v > 0
    if positive.sum() >= 3:
        rate = float(np.polyfit(tail_r[positive], np.log(tail_v[positive]), 1)[0])
    else:
        rate = -math.inf
    end = float(tail_v[-1])
    if rate > -1e-3 and end > 0:
        raise DivergentTailError(
            f"{name} integrand does not decay (exponential rate {rate:.4g} at r = {grid[-1]})",
            math.inf)
    tail = end / -rate if rate < 0 else 0.0
    if tail > rtol * max(abs(total), 1e-300):
        raise DivergentTailError(
            f"{name} integrand still significant at r = {grid[-1]} (rate {rate:.4g})", tail)
    return total


def bilinear_bound(params, delta, eps, g, q):
    """(A_n int phi_0 mu^{-1} |g|^{q/2} sinh^{n-1} dr)^{2/q} for q in [2, inf)."""
    if not 2.0 <= q < math.inf:
        raise ValueError("q must lie in [2, inf)")
    eps = default_epsilon(params, delta) if eps is None else eps
    _check_epsilon(params, delta, eps)

    def integrand(r):
        return (phi0(params, r) / weight_mu(params, delta, r, eps)
                * np.abs(g(r)) ** (0.5 * q))

    total = _radial_integral(params, g.grid, integrand, f"bilinear (q = {q})")
    return total ** (2.0 / q)


def kunze_stein_via_transform(params, psi):
    """The same quantity as the spherical transform of |psi| at lam = 0."""
    return float(np.real(spherical_transform(params, psi.map(np.abs), 0.0, tail_tol=1e-8)))


@dataclass(frozen=True)
class DispersiveRow:
    t: float
    pair_id: int
    value: complex
    tail_bound: float
    reliable: bool


@dataclass(frozen=True)
class DispersiveTable:
    rows: tuple
    sup: tuple
    small_fit: object
    large_fit: object
    sigma: complex
    q: float
    delta: float

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "pair_id", "value_re", "value_im", "tail_bound", "reliable"])
        for row in self.rows:
            w.writerow([fmt(row.t), row.pair_id, fmt(row.value.real), fmt(row.value.imag),
                        fmt(row.tail_bound), int(row.reliable)])
        return buf.getvalue()

    def summary(self, n):
        def pack(fit, window, target):
            out = {"window": list(window), "target": target}
            if fit is None:
                out.update(slope=None, r2=None)
            else:
                out.update(slope=fit.slope, r2=fit.r2)
            return out
        return {
            "small_slope": pack(self.small_fit, SMALL_WINDOW, -(n - 1) / 2),
            "large_slope": pack(self.large_fit, LARGE_WINDOW, -1.5),
            "windows": {"small": list(SMALL_WINDOW), "large": list(LARGE_WINDOW)},
            "tolerances": {"reliable_rtol": RELIABLE_RTOL, "reliable_atol": RELIABLE_ATOL,
                           "richardson_rtol": kn.RICHARDSON_RTOL,
                           "light_cone_band": kn.LIGHT_CONE_BAND},
            "sigma": [self.sigma.real, self.sigma.imag],
            "q": self.q,
            "delta": self.delta,
            "flagged_rows": sum(1 for r in self.rows if not r.reliable),
        }

    def summary_json(self, n):
        return json.dumps(self.summary(n), indent=2, sort_keys=True) + "\n"


def fmt(x):
    """17 significant digits, so values round-trip exactly."""
    return format(float(x), ".17g")


def _window_fit(ts, sups, ok, window):
    pts = [(t, s) for t, s, good in zip(ts, sups, ok)
           if good and window[0] <= t <= window[1] and s > 0]
    if len(pts) < 5:
        return None
    return kn.fit_decay_exponent(pts)


def check_pairs_off_light_cone(group, pairs, radius, t_grid):
    for pid, (x, y) in enumerate(pairs):
        d = _orbit(group, x, y, radius)
        for t in t_grid:
            near = np.abs(d - abs(t)) < kn.LIGHT_CONE_BAND
            if np.any(near):
                raise kn.LightConeError(
                    f"pair {pid}: orbit distance {d[near][0]:.6g} within "
                    f"{kn.LIGHT_CONE_BAND} of t = {t:.6g}")


def dispersive_decay_experiment(group, params, sigma, q, t_grid, pairs, radius=12.0,
                                kappa=None, kappa_tilde=None, delta=None, mapper=map):
    """Kernel sup over sample pairs for every t, with log-log fits in two windows.

    ``mapper`` evaluates the per-t jobs; pass an executor's map to parallelize.
    """
    sigma = complex(sigma)
    need = (params.n + 1) * (0.5 - 1.0 / q)
    if sigma.real < need - 1e-12:
        raise ValueError(f"Re sigma = {sigma.real} below (n+1)(1/2 - 1/q) = {need}")
    if delta is None:
        delta = gr.critical_exponent(group).value
    _require_subcritical(params, delta)
    t_grid = [float(t) for t in t_grid]
    check_pairs_off_light_cone(group, pairs, radius, t_grid)
    kappa = params.rho if kappa is None else kappa
    kappa_tilde = params.rho + 1.0 if kappa_tilde is None else kappa_tilde
    orbits = [_orbit(group, x, y, radius) for x, y in pairs]
    job = _TimeJob(group, params, sigma, kappa, kappa_tilde, pairs, orbits, radius, delta)
    per_t = list(mapper(job, t_grid))
    rows = tuple(row for block in per_t for row in block)
    sups, ok = [], []
    for block in per_t:
        sups.append(max(abs(r.value) for r in block))
        ok.append(all(r.reliable for r in block))
    small = _window_fit(t_grid, sups, ok, SMALL_WINDOW)
    large = _window_fit(t_grid, sups, ok, LARGE_WINDOW)
    return DispersiveTable(rows, tuple(zip(t_grid, sups, ok)), small, large, sigma, q, delta)


@dataclass(frozen=True, eq=False)
class _TimeJob:
    group: object
    params: object
    sigma: complex
    kappa: float
    kappa_tilde: float
    pairs: list
    orbits: list
    radius: float
    delta: float

    def __call__(self, t):
        wp = kn.WaveParams(t, self.kappa, self.kappa_tilde, self.sigma)
        allr = np.unique(np.concatenate(self.orbits))
        if self.group.kind != "trivial":
            allr = envelope_radii(wp, self.radius, allr)
        vals, ok = kn.omega_full_many(self.params, wp, allr)
        c_emp = envelope_constant(self.params, allr, vals)
        rows = []
        for pid, ((x, y), d) in enumerate(zip(self.pairs, self.orbits)):
            idx = np.searchsorted(allr, d)
            kv = _assemble(self.params, self.group, x, y, self.radius, d, vals[idx], ok[idx],
                           c_emp, self.delta, None)
            rows.append(DispersiveRow(t, pid, kv.value, kv.tail_bound, kv.reliable))
        return rows


def offset_pairs(n, offsets, separation_axis=2):
    """Pairs (o, y) with y pushed off the origin along ``separation_axis``."""
    o = geo.origin(n)
    return [(o, geo.apply(geo.boost(float(a), separation_axis, n), o)) for a in offsets]
