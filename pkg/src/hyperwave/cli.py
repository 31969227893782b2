"""Command line front end.

    hyperwave kernel    --config c.json [--out k.csv]
    hyperwave decay-fit --input k.csv --column abs_omega0 [--window 4 64]
    hyperwave group     --config c.json [--out g.json]
    hyperwave quotient  --config c.json [--out q.csv] [--summary q.json]
    hyperwave exponents gwp|admissible|sigma --n 3 [...]

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
Errors are reported on stderr as a JSON object.
"""

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager

import numpy as np

from hyperwave import groups as gr
from hyperwave import kernels as kn
from hyperwave import locsym as ls
from hyperwave import spherical as sp
from hyperwave import strichartz as st

CONFIG_VERSION = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

DEFAULTS = {
    "version": CONFIG_VERSION,
    "space": {"n": 3},
    "kernel": {"kappa": None, "kappa_tilde": None, "sigma_re": 2.0, "sigma_im": 0.0,
               "cutoff": "standard"},
    "grids": {"t_min": 4.0, "t_max": 64.0, "t_count": 12, "log_spaced": True,
              "r": [0.5, 1.0, 2.0], "pair_offsets": [0.5, 0.9]},
    "group": {"preset": "cyclic"},
    "quotient": {"radius": 12.0, "q": 4.0},
    "tolerances": {"light_cone_band": kn.LIGHT_CONE_BAND},
}


class UsageError(Exception):
    pass


# sections replaced wholesale rather than merged key by key
ATOMIC_SECTIONS = ("group",)


def _merge(base, over):
    out = copy.deepcopy(base)
    for key, val in over.items():
        if key in ATOMIC_SECTIONS:
            out[key] = copy.deepcopy(val)
        elif isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path=None, experiment=None):
    doc = {}
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path!r}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError("config must be a JSON object")
        if doc.get("version") != CONFIG_VERSION:
            raise UsageError(f"config version must be {CONFIG_VERSION}, got {doc.get('version')!r}")
    experiments = doc.pop("experiments", {})
    cfg = _merge(DEFAULTS, doc)
    if experiment is not None:
        if experiment not in experiments:
            raise UsageError(f"unknown experiment {experiment!r}; "
                             f"available: {sorted(experiments)}")
        cfg = _merge(cfg, experiments[experiment])
    return cfg


def _apply_overrides(cfg, args):
    pairs = [("n", ("space", "n")), ("sigma_re", ("kernel", "sigma_re")),
             ("sigma_im", ("kernel", "sigma_im")), ("t_min", ("grids", "t_min")),
             ("t_max", ("grids", "t_max")), ("t_count", ("grids", "t_count")),
             ("radius", ("quotient", "radius"))]
    for attr, (sec, key) in pairs:
        val = getattr(args, attr, None)
        if val is not None:
            cfg[sec][key] = val
    return cfg


def t_grid(cfg):
    g = cfg["grids"]
    try:
        lo, hi, count = float(g["t_min"]), float(g["t_max"]), int(g["t_count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad time grid: {exc}") from exc
    if not (0 < lo <= hi and count >= 1):
        raise UsageError("time grid needs 0 < t_min <= t_max and t_count >= 1")
    ts = np.geomspace(lo, hi, count) if g.get("log_spaced", True) else np.linspace(lo, hi, count)
    return [float(t) for t in ts]


def _space(cfg):
    try:
        return sp.space(int(cfg["space"]["n"]))
    except (KeyError, TypeError) as exc:
        raise UsageError(f"bad space section: {exc}") from exc


def _wave(cfg, params, t):
    k = cfg["kernel"]
    kappa = params.rho if k.get("kappa") is None else float(k["kappa"])
    kappa_tilde = params.rho + 1.0 if k.get("kappa_tilde") is None else float(k["kappa_tilde"])
    wp = kn.WaveParams(t, kappa, kappa_tilde, complex(float(k["sigma_re"]), float(k["sigma_im"])))
    kn.check_wave_params(params, wp, strip=True)
    return wp


def _group(cfg):
    g = cfg["group"]
    if "preset" in g:
        return gr.load_preset(g["preset"])
    if "file" in g:
        return gr.load_preset(g["file"])
    return gr.group_from_dict(g)


def worker_count():
    raw = os.environ.get("HYPERWAVE_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        count = int(raw)
    except ValueError:
        raise UsageError(f"HYPERWAVE_THREADS must be an integer, got {raw!r}") from None
    if count < 1:
        raise UsageError("HYPERWAVE_THREADS must be at least 1")
    return count


@contextmanager
def _mapper():
    count = worker_count()
    if count == 1:
        yield map
        return
    with ThreadPoolExecutor(max_workers=count) as pool:
        yield pool.map


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _output(cfg, args, key):
    if args.out is not None:
        return args.out
    return cfg.get("outputs", {}).get(key)


class _KernelJob:
    def __init__(self, cfg, params, rs, band, cut):
        self.cfg, self.params, self.rs, self.band, self.cut = cfg, params, rs, band, cut

    def __call__(self, t):
        wp = _wave(self.cfg, self.params, t)
        low = kn.omega0_many(self.params, wp, self.rs, self.cut)
        outside = np.abs(self.rs - abs(t)) >= self.band
        high = np.full(self.rs.size, math.nan)
        ok = np.zeros(self.rs.size, dtype=bool)
        if np.any(outside):
            vals = kn.omega_inf_many(self.params, wp, self.rs[outside], self.cut, band=self.band)
            high[outside] = [abs(v.value) for v in vals]
            ok[outside] = [v.reliable for v in vals]
        return [(t, r, abs(lo), hi, good) for r, lo, hi, good in zip(self.rs, low, high, ok)]


def cmd_kernel(cfg, args):
    params = _space(cfg)
    rs = np.asarray(cfg["grids"].get("r") or [], dtype=float)
    if rs.size == 0:
        raise UsageError("empty r grid")
    if np.any(rs < 0):
        raise UsageError("r grid must be nonnegative")
    ts = t_grid(cfg)
    band = float(cfg["tolerances"].get("light_cone_band", kn.LIGHT_CONE_BAND))
    job = _KernelJob(cfg, params, rs, band, kn.cutoffs(cfg["kernel"].get("cutoff", "standard")))
    for t in ts:
        _wave(cfg, params, t)
    with _mapper() as mapper:
        blocks = list(mapper(job, ts))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "r", "abs_omega0", "abs_omega_inf_tilde", "reliable"])
    for block in blocks:
        for t, r, lo, hi, good in block:
            w.writerow([ls.fmt(t), ls.fmt(r), ls.fmt(lo), ls.fmt(hi), int(good)])
    _emit(buf.getvalue(), _output(cfg, args, "kernel_csv"))


def decay_fit_from_csv(text, column, window):
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or column not in reader.fieldnames or "t" not in reader.fieldnames:
        raise UsageError(f"column {column!r} (and t) must be present; have {reader.fieldnames}")
    sup = {}
    for row in reader:
        if "reliable" in row and row["reliable"] not in ("1", "True", "true"):
            continue
        t, v = float(row["t"]), abs(float(row[column]))
        if not (window[0] <= t <= window[1]) or not v > 0 or not math.isfinite(v):
            continue
        sup[t] = max(sup.get(t, 0.0), v)
    if len(sup) < 5:
        raise UsageError(f"need at least 5 usable rows in window {list(window)}, got {len(sup)}")
    fit = kn.fit_decay_exponent(sorted(sup.items()))
    return {"column": column, "slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2,
            "window": list(window), "points": len(sup)}


def cmd_decay_fit(args):
    try:
        with open(args.input) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {args.input!r}: {exc}") from exc
    window = tuple(args.window) if args.window else (0.0, math.inf)
    _emit(_dump_json(decay_fit_from_csv(text, args.column, window)), args.out)


def cmd_group(cfg, args):
    group = _group(cfg)
    est = gr.critical_exponent(group)
    cert = group.certificate
    out = {
        "kind": group.kind,
        "n": group.n,
        "delta_counting": est.counting,
        "delta_abscissa": est.abscissa,
        "delta_r2": est.r2,
        "delta_radius": est.radius,
        "orbit_size": est.samples,
        "ping_pong_margin": None if cert is None else cert.margin,
        "tolerances": {"ping_pong_margin": gr.PING_PONG_MARGIN,
                       "min_delta_samples": gr.MIN_DELTA_SAMPLES},
    }
    _emit(_dump_json(out), _output(cfg, args, "group_json"))


def cmd_quotient(cfg, args):
    params = _space(cfg)
    group = _group(cfg)
    if group.n != params.n:
        raise UsageError(f"group acts on H^{group.n} but space has n = {params.n}")
    ts = t_grid(cfg)
    wp = _wave(cfg, params, ts[0])
    offsets = cfg["grids"].get("pair_offsets") or []
    if not offsets:
        raise UsageError("empty pair_offsets")
    q = float(cfg["quotient"]["q"])
    with _mapper() as mapper:
        table = ls.dispersive_decay_experiment(
            group, params, wp.sigma, q, ts, ls.offset_pairs(params.n, offsets),
            radius=float(cfg["quotient"]["radius"]), kappa=wp.kappa,
            kappa_tilde=wp.kappa_tilde, mapper=mapper)
    _emit(table.to_csv(), _output(cfg, args, "quotient_csv"))
    summary_path = args.summary or cfg.get("outputs", {}).get("quotient_summary")
    if summary_path is not None:
        _emit(table.summary_json(params.n), summary_path)


def cmd_exponents(args):
    n = args.n
    if args.which == "gwp":
        th = st.gwp_thresholds(n)
        out = {"n": n, "gamma1": th.gamma1, "gamma2": th.gamma2, "gamma_c": th.gamma_c,
               "gamma3": th.gamma3, "gamma4": th.gamma4}
        if args.gamma is not None:
            reg = st.gwp_regularity(n, args.gamma)
            out["regularity"] = {"gamma": args.gamma, "sigma": reg.sigma, "branch": reg.branch,
                                 "open_threshold": reg.open_threshold}
        _emit(_dump_json(out), args.out)
    elif args.which == "admissible":
        _emit(st.raster_csv(n, args.count), args.out)
    else:
        if args.inv_p is None or args.inv_q is None:
            raise UsageError("sigma needs --inv-p and --inv-q")
        pair = st.ExponentPair(args.inv_p, args.inv_q)
        out = {"n": n, "inv_p": pair.inv_p, "inv_q": pair.inv_q,
               "sigma_pq": st.sigma_pq(n, pair), "admissible": st.is_admissible(n, pair)}
        _emit(_dump_json(out), args.out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="hyperwave", description="Wave kernel experiments on hyperbolic space.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def configured(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config")
        s.add_argument("--experiment")
        s.add_argument("--out")
        s.add_argument("--n", type=int)
        s.add_argument("--sigma-re", dest="sigma_re", type=float)
        s.add_argument("--sigma-im", dest="sigma_im", type=float)
        s.add_argument("--t-min", dest="t_min", type=float)
        s.add_argument("--t-max", dest="t_max", type=float)
        s.add_argument("--t-count", dest="t_count", type=int)
        return s

    configured("kernel", "low and high frequency kernels on a (t, r) grid")
    configured("group", "critical exponent and ping-pong data of a group")
    q = configured("quotient", "dispersive decay of the summed kernel on a quotient")
    q.add_argument("--radius", type=float)
    q.add_argument("--summary")

    d = sub.add_parser("decay-fit", help="log-log slope of a CSV column")
    d.add_argument("--input", required=True)
    d.add_argument("--column", required=True)
    d.add_argument("--window", type=float, nargs=2, metavar=("T_MIN", "T_MAX"))
    d.add_argument("--out")

    e = sub.add_parser("exponents", help="Strichartz and well-posedness exponents")
    e.add_argument("which", choices=["gwp", "admissible", "sigma"])
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--gamma", type=float)
    e.add_argument("--count", type=int, default=51)
    e.add_argument("--inv-p", dest="inv_p", type=float)
    e.add_argument("--inv-q", dest="inv_q", type=float)
    e.add_argument("--out")
    return p


def run(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "decay-fit":
        return cmd_decay_fit(args)
    if args.command == "exponents":
        return cmd_exponents(args)
    cfg = _apply_overrides(load_config(args.config, args.experiment), args)
    return {"kernel": cmd_kernel, "group": cmd_group, "quotient": cmd_quotient}[args.command](cfg, args)


def _fail(code, exc):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                 "exit_code": code}, sort_keys=True) + "\n")
    return code


def main(argv=None):
    try:
        run(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc)
    except (ValueError, KeyError, TypeError) as exc:
        return _fail(EXIT_USAGE, exc)
    except (ArithmeticError, RuntimeError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
