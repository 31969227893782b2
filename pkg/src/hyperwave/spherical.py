"""Spherical analysis on H^n: phi_lambda, the c-function and the transform pair.

Normalization: curvature -1, so rho = (n-1)/2, and the Riemannian volume
in geodesic polar coordinates is A_n sinh(r)^(n-1) dr with A_n the area of
the unit sphere S^(n-1).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from hyperwave import _phi_kernels as pk
from hyperwave._quad import QuadratureError, composite_rule, gauss_legendre
from hyperwave.gamma import loggamma

PHI_TOL = 1e-11
MAX_BETA_NODES = 1 << 21
SERIES_MIN_R = 0.01
SERIES_MIN_PHASE = 2.0


class DivergentTailError(ArithmeticError):
    """A radial integral does not converge on the available range."""

    def __init__(self, message, tail_estimate):
        super().__init__(f"{message} (tail estimate {tail_estimate:.3e})")
        self.tail_estimate = tail_estimate


@dataclass(frozen=True)
class SpaceParams:
    """Structure constants of H^n(R)."""

    n: int
    m_alpha: float = field(default=None)
    m_2alpha: float = 0.0
    rho: float = field(default=None)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n}")
        if self.m_2alpha != 0:
            raise ValueError("only real hyperbolic spaces are supported (m_2alpha = 0)")
        m_alpha = float(self.n - 1) if self.m_alpha is None else float(self.m_alpha)
        if m_alpha != self.n - 1:
            raise ValueError(f"m_alpha must equal n - 1 = {self.n - 1}")
        rho = 0.5 * (m_alpha + 2.0 * self.m_2alpha)
        if self.rho is not None and not math.isclose(self.rho, rho):
            raise ValueError(f"rho must be (n-1)/2 = {rho}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m_alpha", m_alpha)
        object.__setattr__(self, "rho", rho)

    @property
    def log_c0(self):
        """log of the c-function constant fixed by c(-i rho) = 1."""
        return _log_c0(self.n)

    @property
    def sphere_area(self):
        return unit_sphere_area(self.n)

    @property
    def inversion_constant(self):
        return inversion_constant(self)


def space(n):
    return SpaceParams(n)


def unit_sphere_area(n):
    """Area of the unit sphere S^(n-1) in R^n."""
    return 2.0 * math.pi ** (0.5 * n) / math.gamma(0.5 * n)


def _log_c0(n):
    m_alpha = float(n - 1)
    rho = 0.5 * m_alpha
    z = complex(rho)  # i * lam at lam = -i rho
    val = (-z * math.log(2.0) + loggamma(z)
           - loggamma(0.5 * (z + 0.5 * m_alpha + 1.0))
           - loggamma(0.5 * (z + 0.5 * m_alpha)))
    return complex(-val)


def inversion_constant(params):
    """Constant C_0 in f(r) = C_0 int_0^inf Hf(lam) phi_lam(r) |c(lam)|^-2 dlam.

    Closed form A_n Gamma(2 rho)^2 / ((2 pi)^n Gamma(rho)^2); see
    :func:`calibrate_inversion_constant` for the round-trip check.
    """
    rho = params.rho
    return (unit_sphere_area(params.n) / (2.0 * math.pi) ** params.n
            * math.exp(2.0 * (math.lgamma(2.0 * rho) - math.lgamma(rho))))


def c_function(params, lam):
    """Harish-Chandra c-function, complex lam allowed; infinite at lam = 0."""
    lam = np.asarray(lam, dtype=complex)
    z = 1j * lam
    with np.errstate(divide="ignore", invalid="ignore"):
        logc = (params.log_c0 - z * math.log(2.0) + loggamma(z)
                - loggamma(0.5 * (z + 0.5 * params.m_alpha + 1.0))
                - loggamma(0.5 * (z + 0.5 * params.m_alpha + params.m_2alpha)))
    return np.exp(logc)


def plancherel_density(params, lam):
    """|c(lam)|^-2 for real lam; even, vanishing at 0."""
    lam = np.asarray(lam, dtype=float)
    flat = np.abs(np.atleast_1d(lam)).ravel()
    out = np.zeros(flat.shape)
    nz = flat > 0
    if np.any(nz):
        out[nz] = np.exp(pk.log_density(flat[nz], params.m_alpha, params.m_2alpha,
                                        params.log_c0))
    out = out.reshape(lam.shape)
    return out[()] if out.ndim == 0 else out


def _phi_quadrature(params, lams, r, tol=PHI_TOL):
    n = params.n
    lam_max = float(np.max(np.abs(lams))) if lams.size else 0.0
    panels = max(1, int(math.ceil(lam_max * r / 8.0)))
    pref = pk.quad_prefactor(n, r)
    prev = None
    while True:
        beta, w = composite_rule(0.0, 0.5 * math.pi, panels, 16)
        amp, s = pk.beta_amplitude(n, r, beta, w)
        cur = pk.cos_sum(lams, s, amp)
        if prev is not None:
            err = float(np.linalg.norm(cur - prev))
            scale = float(np.sum(np.abs(amp)))
            if err <= tol * scale:
                return pref * cur
            if beta.size >= MAX_BETA_NODES:
                raise QuadratureError(
                    f"phi quadrature did not converge at r={r}, lam_max={lam_max}",
                    pref * err)
        prev = cur
        panels *= 2


def _series_mask(lams, r):
    return (np.abs(lams) * r >= SERIES_MIN_PHASE) & (r >= SERIES_MIN_R)


def _phi_real_row(params, lams, r, logc, tol):
    # lams real and nonnegative; logc aligned with lams (unused where lam r < 2)
    if r == 0.0:
        return np.ones(lams.shape)
    out = np.empty(lams.shape)
    use_series = _series_mask(lams, r)
    if np.any(use_series):
        out[use_series] = pk.series(lams[use_series], r, params.n, logc[use_series])
        bad = np.zeros(lams.shape, dtype=bool)
        bad[use_series] = np.isnan(out[use_series])
        use_series &= ~bad
    if not np.all(use_series):
        out[~use_series] = _phi_quadrature(params, lams[~use_series], r, tol)
    return out


def log_c_real(params, lams):
    """log c(|lam|) on real input; entries with lam = 0 are left at 0."""
    lams = np.abs(np.asarray(lams, dtype=float))
    out = np.zeros(lams.shape, dtype=complex)
    nz = lams > 0
    out[nz] = pk.log_c(lams[nz], params.m_alpha, params.m_2alpha, params.log_c0)
    return out


def phi_table(params, lams, rs, tol=PHI_TOL, logc=None):
    """Matrix phi_lam(r) with one row per radius and one column per real lam."""
    lams = np.abs(np.ascontiguousarray(lams, dtype=float))
    rs = np.atleast_1d(np.asarray(rs, dtype=float))
    if np.any(rs < 0):
        raise ValueError("radii must be nonnegative")
    if logc is None:
        logc = log_c_real(params, lams)
    table = np.empty((rs.size, lams.size))
    for i, r in enumerate(rs):
        table[i] = _phi_real_row(params, lams, float(r), logc, tol)
    return table


def phi_values(params, lams, r, method="auto", tol=PHI_TOL):
    """phi_lam(r) for an array of spectral parameters and one radius.

    Real input gives real output. ``method`` is 'auto', 'quadrature' or
    'series'; 'auto' uses the series where |lam| r >= 2 and r >= 0.01.
    """
    r = float(r)
    if r < 0:
        raise ValueError(f"radius must be nonnegative, got {r}")
    lams = np.asarray(lams)
    is_complex = np.iscomplexobj(lams) and np.any(np.imag(lams) != 0)
    lams = lams.astype(complex if is_complex else float)
    shape = lams.shape
    flat = np.ravel(lams)
    if r == 0.0:
        return np.ones(shape, dtype=flat.dtype)
    if method == "quadrature" or (method == "auto" and is_complex):
        return _phi_quadrature(params, flat, r, tol).reshape(shape)
    if method == "series":
        if is_complex or np.any(flat == 0):
            raise ValueError("the series route needs real nonzero lam")
        absl = np.abs(flat)
        return pk.series(absl, r, params.n, log_c_real(params, absl)).reshape(shape)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    return phi_table(params, flat, [r], tol)[0].reshape(shape)


def phi_lambda(params, lam, r, method="auto"):
    """Spherical function phi_lam(r) as a complex number (or array over r)."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    lam_arr = np.array([lam])
    vals = np.array([phi_values(params, lam_arr, ri, method)[0] for ri in r_arr],
                    dtype=complex)
    return vals[0] if np.ndim(r) == 0 else vals.reshape(np.shape(r))


def phi0(params, r):
    """Ground spherical function phi_0(r)."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    vals = np.array([phi_values(params, np.zeros(1), ri, "quadrature")[0] for ri in r_arr])
    return float(vals[0]) if np.ndim(r) == 0 else vals.reshape(np.shape(r))


def radial_laplacian(params, f, r, h):
    """Second-order finite difference of f'' + (n-1) coth(r) f'."""
    fp, f0, fm = f(r + h), f(r), f(r - h)
    d2 = (fp - 2.0 * f0 + fm) / (h * h)
    d1 = (fp - fm) / (2.0 * h)
    return d2 + (params.n - 1) / np.tanh(r) * d1


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Samples of a bi-K-invariant function on a radial grid starting at 0."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values)
        if grid.ndim != 1 or grid.size < 4:
            raise ValueError("need at least four grid points")
        if grid[0] != 0.0:
            raise ValueError("radial grid must start at 0")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("radial grid must be strictly increasing")
        if values.shape != grid.shape:
            raise ValueError("values and grid must have the same length")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_spline", CubicSpline(grid, values))

    @classmethod
    def from_callable(cls, func, r_max, step=0.02):
        grid = np.linspace(0.0, r_max, int(round(r_max / step)) + 1)
        return cls(grid, func(grid))

    @property
    def r_max(self):
        return float(self.grid[-1])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.grid[-1] * (1 + 1e-14)):
            raise ValueError("evaluation outside the sampled range (extrapolation is not allowed)")
        return self._spline(r)

    def map(self, func):
        return RadialFunction(self.grid, func(self.values))


def radial_nodes(grid, m=6):
    """Gauss-Legendre nodes and weights on every interval of a radial grid."""
    x, w = gauss_legendre(m)
    a, b = grid[:-1], grid[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def volume_density(params, r):
    return unit_sphere_area(params.n) * np.sinh(r) ** (params.n - 1)


def _tail_estimate(params, f):
    r_end = f.r_max
    return float(abs(f.values[-1]) * phi0(params, r_end) * volume_density(params, r_end))


def spherical_transform(params, f, lam, tail_tol=1e-9):
    """Hf(lam) = int_0^inf f(r) phi_lam(r) A_n sinh(r)^(n-1) dr over the grid of f."""
    lam_arr = np.atleast_1d(np.asarray(lam))
    nodes, weights = radial_nodes(f.grid)
    fw = f(nodes) * weights * volume_density(params, nodes)
    if not np.any(fw):
        out = np.zeros(lam_arr.shape, dtype=complex)
        return out[0] if np.ndim(lam) == 0 else out
    if np.iscomplexobj(lam_arr) and np.any(np.imag(lam_arr) != 0):
        table = np.array([phi_values(params, lam_arr, r) for r in nodes])
    else:
        table = phi_table(params, np.real(lam_arr), nodes)
    out = (fw @ table).astype(complex)
    tail = _tail_estimate(params, f)
    if tail > tail_tol * max(1.0, float(np.max(np.abs(out)))):
        raise DivergentTailError(
            f"radial integrand not negligible at r = {f.r_max}; extend the grid", tail)
    return out[0] if np.ndim(lam) == 0 else out


def spectral_cutoff(params, ghat, rel=1e-17, lam_hi=400.0):
    """Smallest lam beyond which |ghat| * |c|^-2 stays below rel * peak."""
    lam = np.linspace(0.0, lam_hi, 8001)
    vals = np.abs(ghat(lam)) * plancherel_density(params, lam)
    peak = float(np.max(vals))
    if peak == 0:
        return 0.0
    big = np.nonzero(vals > rel * peak)[0]
    if big[-1] == lam.size - 1:
        raise DivergentTailError("spectral profile does not decay on [0, 400]",
                                 float(vals[-1]))
    return float(lam[min(big[-1] + 1, lam.size - 1)])


def inverse_transform(params, ghat, r, constant=None, tol=1e-13):
    """f(r) = C_0 int_0^inf ghat(lam) phi_lam(r) |c(lam)|^-2 dlam for even ghat."""
    c0 = inversion_constant(params) if constant is None else constant
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    lam_max = spectral_cutoff(params, ghat)
    if lam_max == 0.0:
        out = np.zeros(r_arr.shape, dtype=complex)
        return out[0] if np.ndim(r) == 0 else out
    panels = max(2, int(math.ceil(lam_max * (1.0 + r_arr.max()) / 4.0)))
    prev = None
    while True:
        lam, w = composite_rule(0.0, lam_max, panels, 16)
        weight = ghat(lam) * plancherel_density(params, lam) * w
        cur = phi_table(params, lam, r_arr) @ weight
        if prev is not None:
            err = float(np.max(np.abs(cur - prev)))
            if err <= tol * max(1.0, float(np.max(np.abs(cur)))):
                break
            if panels > 1 << 14:
                raise QuadratureError("inverse transform did not converge", err)
        prev = cur
        panels *= 2
    out = c0 * cur
    return out[0] if np.ndim(r) == 0 else out


def calibrate_inversion_constant(params, ghat=None, r_max=None, lam_probe=(0.5, 1.0, 2.0)):
    """Fix C_0 numerically from the round trip H(inverse(ghat)) = ghat."""
    if ghat is None:
        def ghat(lam):
            return np.exp(-np.asarray(lam) ** 2)
    if r_max is None:
        r_max = 24.0
    f = RadialFunction.from_callable(
        lambda r: inverse_transform(params, ghat, r, constant=1.0).real, r_max)
    probe = np.asarray(lam_probe, dtype=float)
    fwd = spherical_transform(params, f, probe).real
    target = ghat(probe)
    return float(np.dot(fwd, target) / np.dot(fwd, fwd))
