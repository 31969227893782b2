"""Radial kernels of the Klein-Gordon type propagator on H^n.

The multiplier of W_t^sigma is (lam^2 + kt^2)^(-sigma/2) exp(i t sqrt(lam^2 + k^2)),
split by a smooth partition of unity into a compactly supported low part and
a high part. The high part is an oscillatory integral that does not converge
absolutely at the edge of the strip, so it is Abel-summed with damping
exp(-eta lam) and extrapolated to eta = 0.
"""

import math
from dataclasses import dataclass

import numpy as np

from hyperwave._quad import QuadratureError, composite_rule, gauss_legendre
from hyperwave.gamma import rgamma
from hyperwave.spherical import (
    inversion_constant,
    log_c_real,
    phi0,
    phi_table,
)

LIGHT_CONE_BAND = 0.1
ETA_LADDER = (0.2, 0.1, 0.05, 0.025)
RICHARDSON_RTOL = 0.05
RICHARDSON_ATOL = 1e-12
LOW_TOL = 1e-12
HIGH_TOL = 1e-9
ABEL_CUTOFF = 1e-15
_CHUNK_PANELS = 4096


class LightConeError(ValueError):
    """Evaluation requested too close to r = |t|."""


@dataclass(frozen=True)
class WaveParams:
    t: float
    kappa: float
    kappa_tilde: float
    sigma: complex

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "kappa_tilde", float(self.kappa_tilde))
        object.__setattr__(self, "sigma", complex(self.sigma))
        if self.t == 0 or not math.isfinite(self.t):
            raise ValueError("t must be finite and nonzero")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")

    @classmethod
    def default(cls, params, t, sigma=None):
        """Wave case kappa = rho with kappa_tilde = rho + 1."""
        if sigma is None:
            sigma = 0.5 * (params.n + 1)
        return cls(t, params.rho, params.rho + 1.0, sigma)

    def with_t(self, t):
        return WaveParams(t, self.kappa, self.kappa_tilde, self.sigma)


def check_wave_params(params, wp, strip=False):
    if wp.kappa_tilde <= params.rho:
        raise ValueError(f"kappa_tilde must exceed rho = {params.rho}")
    if strip and not 0.0 <= wp.sigma.real <= 0.5 * (params.n + 1):
        raise ValueError(f"Re sigma must lie in [0, {0.5 * (params.n + 1)}]")


def _psi_standard(s):
    s = np.asarray(s, dtype=float)
    out = np.where(s <= 0, 1.0, 0.0)
    mid = (s > 0) & (s < 1)
    sm = s[mid]
    a = np.exp(-1.0 / (1.0 - sm))
    b = np.exp(-1.0 / sm)
    out[mid] = a / (a + b)
    return out


def _psi_steep(s):
    s = np.asarray(s, dtype=float)
    out = np.where(s <= 0, 1.0, 0.0)
    mid = (s > 0) & (s < 1)
    sm = s[mid]
    a = np.exp(-1.0 / (1.0 - sm) ** 2)
    b = np.exp(-1.0 / sm ** 2)
    out[mid] = a / (a + b)
    return out


_PROFILES = {"standard": _psi_standard, "steep": _psi_steep}


@dataclass(frozen=True)
class CutoffPair:
    """Smooth even partition of unity chi_0 + chi_inf = 1."""

    profile: str = "standard"

    def __post_init__(self):
        if self.profile not in _PROFILES:
            raise ValueError(f"unknown cutoff profile {self.profile!r}")

    def chi0(self, lam):
        out = _PROFILES[self.profile](np.abs(np.asarray(lam, dtype=float)) - 1.0)
        return out[()] if out.ndim == 0 else out

    def chi_inf(self, lam):
        out = 1.0 - _PROFILES[self.profile](np.abs(np.asarray(lam, dtype=float)) - 1.0)
        return out[()] if out.ndim == 0 else out


def cutoffs(profile="standard"):
    return CutoffPair(profile)


def multiplier(wp, lam):
    """(lam^2 + kt^2)^(-sigma/2) exp(i t sqrt(lam^2 + k^2))."""
    lam = np.asarray(lam, dtype=float)
    log_amp = -0.5 * wp.sigma * np.log(lam * lam + wp.kappa_tilde ** 2)
    return np.exp(log_amp + 1j * wp.t * np.sqrt(lam * lam + wp.kappa ** 2))


def _panel_width(t, r_max):
    return min(0.25, math.pi / (4.0 * (abs(t) + r_max + 1.0)))


def omega0_many(params, wp, rs, cut=None, tol=LOW_TOL):
    """Low-frequency kernel at several radii, sharing the spectral nodes."""
    check_wave_params(params, wp)
    cut = cutoffs() if cut is None else cut
    rs = np.atleast_1d(np.asarray(rs, dtype=float))
    if np.any(rs < 0):
        raise ValueError("radii must be nonnegative")
    panels = int(math.ceil(2.0 / _panel_width(wp.t, float(rs.max()))))
    c0 = inversion_constant(params)
    prev = None
    while True:
        lam, w = composite_rule(0.0, 2.0, panels, 16)
        logc = log_c_real(params, lam)
        weight = cut.chi0(lam) * multiplier(wp, lam) * np.exp(-2.0 * logc.real) * w
        table = phi_table(params, lam, rs, logc=logc)
        cur = table @ weight
        if prev is not None:
            err = float(np.linalg.norm(cur - prev))
            scale = float(np.max(np.abs(table) @ np.abs(weight)))
            if err <= tol * max(scale, 1e-300):
                return c0 * cur
            if panels >= 1 << 16:
                raise QuadratureError("low-frequency kernel did not converge", c0 * err)
        prev = cur
        panels *= 2


def omega0(params, wp, r, cut=None):
    """omega_t^{sigma,0}(r): the chi_0 part of the kernel, using the inversion constant."""
    vals = omega0_many(params, wp, r, cut)
    return complex(vals[0]) if np.ndim(r) == 0 else vals


@dataclass(frozen=True)
class HighFrequencyValue:
    """Abel-summed high-frequency kernel value with its extrapolation record."""

    value: complex
    reliable: bool
    richardson_gap: float
    levels: tuple

    @property
    def flag(self):
        return "OK" if self.reliable else "UNRELIABLE"


def _damping_ladder(t, r):
    # the integrand oscillates with frequencies |t| + r and ||t| - r|
    omega = min(abs(t) + r, abs(abs(t) - r))
    scale = min(1.0, omega)
    return np.array(ETA_LADDER) * scale


def _abel_limit(params, wp, eta_min):
    p = max(0.0, params.n - 1 - wp.sigma.real)
    lam = 1.0 + p / eta_min if p > 0 else 1.0
    for _ in range(200):
        nxt = (p * math.log(max(lam, 1.0)) - math.log(ABEL_CUTOFF)) / eta_min
        if abs(nxt - lam) < 1e-6 * lam:
            break
        lam = nxt
    return max(lam, 2.0)


def _neville(etas, values):
    """Diagonal of the polynomial extrapolation table towards eta = 0."""
    k = len(etas)
    tab = [np.array(values[i], dtype=complex) for i in range(k)]
    diag = [tab[0].copy()]
    for level in range(1, k):
        for i in range(k - level):
            x_lo, x_hi = etas[i], etas[i + level]
            tab[i] = (x_lo * tab[i + 1] - x_hi * tab[i]) / (x_lo - x_hi)
        diag.append(tab[0].copy())
    return diag


def _high_sums(params, wp, rs, etas, lam_max, panels, cut, m=8):
    """Damped sums for every (r, eta), streamed over panel chunks."""
    out = np.zeros((rs.size, len(etas)), dtype=complex)
    mags = np.zeros(rs.size)
    edges = np.linspace(1.0, lam_max, panels + 1)
    for start in range(0, panels, _CHUNK_PANELS):
        stop = min(panels, start + _CHUNK_PANELS)
        lam, w = _rule_on_edges(edges[start:stop + 1], m)
        logc = log_c_real(params, lam)
        weight = cut.chi_inf(lam) * multiplier(wp, lam) * np.exp(-2.0 * logc.real) * w
        table = phi_table(params, lam, rs, logc=logc)
        damp = np.exp(-np.outer(lam, etas))
        out += (table * weight) @ damp
        mags += np.abs(table) @ (np.abs(weight) * damp[:, -1])
    return out, mags


def _rule_on_edges(edges, m):
    x, w = gauss_legendre(m)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def high_frequency_prefactor(params, sigma):
    """e^{sigma^2} / Gamma((n+1)/2 - sigma), via the entire reciprocal Gamma."""
    sigma = complex(sigma)
    return complex(np.exp(sigma * sigma) * rgamma(0.5 * (params.n + 1) - sigma))


def _check_light_cone(wp, rs, band):
    near = np.abs(rs - abs(wp.t)) < band
    if np.any(near):
        raise LightConeError(
            f"r = {rs[near][0]:.6g} lies within {band} of |t| = {abs(wp.t):.6g}")


def omega_inf_many(params, wp, rs, cut=None, regularized=True, tol=HIGH_TOL,
                   band=LIGHT_CONE_BAND):
    """High-frequency kernel at several radii for one time.

    With ``regularized`` the analytic-family factor e^{sigma^2}/Gamma((n+1)/2 - sigma)
    is included. Each radius gets its own damping ladder; radii are grouped
    per ladder so the spectral nodes are shared. Radii within ``band`` of
    |t| are refused.
    """
    check_wave_params(params, wp, strip=regularized)
    cut = cutoffs() if cut is None else cut
    rs = np.atleast_1d(np.asarray(rs, dtype=float))
    if np.any(rs < 0):
        raise ValueError("radii must be nonnegative")
    _check_light_cone(wp, rs, band)
    c0 = inversion_constant(params)
    pref = high_frequency_prefactor(params, wp.sigma) if regularized else 1.0
    results = [None] * rs.size
    ladders = [tuple(_damping_ladder(wp.t, r)) for r in rs]
    for ladder in sorted(set(ladders)):
        idx = np.array([i for i, lad in enumerate(ladders) if lad == ladder])
        etas = np.array(ladder)
        sub = rs[idx]
        lam_max = _abel_limit(params, wp, etas[-1])
        panels = int(math.ceil((lam_max - 1.0) / _panel_width(wp.t, float(sub.max()))))
        coarse, _ = _high_sums(params, wp, sub, etas, lam_max, panels, cut)
        while True:
            fine, mags = _high_sums(params, wp, sub, etas, lam_max, 2 * panels, cut)
            err = np.abs(fine - coarse).max(axis=1)
            if np.all(err <= tol * np.maximum(mags, 1e-300)):
                break
            if panels >= 1 << 24:
                raise QuadratureError("high-frequency kernel did not converge",
                                      float(err.max()))
            coarse = fine
            panels *= 2
        for j, i in enumerate(idx):
            diag = _neville(etas, fine[j])
            best, prev = diag[-1], diag[-2]
            gap = abs(best - prev)
            reliable = bool(gap <= RICHARDSON_RTOL * abs(best) or
                            gap <= RICHARDSON_ATOL * max(mags[j], 1.0))
            scale = c0 * pref
            results[i] = HighFrequencyValue(
                complex(scale * best), reliable,
                float(gap / abs(best)) if best != 0 else math.inf,
                tuple(complex(scale * d) for d in diag))
    return results


def omega_inf_tilde(params, wp, r, cut=None, band=LIGHT_CONE_BAND):
    """Regularized high-frequency kernel at one radius (see omega_inf_many)."""
    return omega_inf_many(params, wp, [r], cut, regularized=True, band=band)[0]


def omega_full_many(params, wp, rs, cut=None, band=LIGHT_CONE_BAND):
    """Kernel of W_t^sigma itself: low part plus the Abel-summed high part.

    Returns (values, reliable) arrays.
    """
    rs = np.atleast_1d(np.asarray(rs, dtype=float))
    low = omega0_many(params, wp, rs, cut)
    high = omega_inf_many(params, wp, rs, cut, regularized=False, band=band)
    vals = low + np.array([h.value for h in high])
    ok = np.array([h.reliable for h in high])
    return vals, ok


def decay_envelope(params, r):
    """(1 + r) phi_0(r), the profile appearing in the low-frequency bounds."""
    return (1.0 + np.asarray(r, dtype=float)) * phi0(params, r)


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r2: float


def fit_decay_exponent(samples):
    """Least-squares line through (log t, log value)."""
    data = np.asarray(list(samples), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("samples must be (t, value) pairs")
    if data.shape[0] < 5:
        raise ValueError(f"need at least 5 samples, got {data.shape[0]}")
    if np.any(data <= 0):
        raise ValueError("all t and values must be positive")
    x, y = np.log(data[:, 0]), np.log(data[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(slope), float(intercept), r2)
