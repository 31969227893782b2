"""Hyperboloid model of real hyperbolic space H^n.

Points are future-pointing unit vectors for the Minkowski form
<x, y> = -x0*y0 + x1*y1 + ... + xn*yn and isometries are matrices in
O+(n, 1). Curvature is -1.
"""

from dataclasses import dataclass

import numpy as np

POINT_TOL = 1e-12
MATRIX_TOL = 1e-10
BLOWUP_TOL = 1e-8
RENORM_EVERY = 16
# Gram-Schmidt in the Minkowski form loses ~eps * max|M|^2 absolutely, so it
# only improves matrices of moderate size
RENORM_MAX_SCALE = 1e3


class GeometryError(ValueError):
    pass


class NumericalBlowupError(ArithmeticError):
    """A long product drifted off O+(n, 1) even after re-orthonormalization."""


def minkowski(x, y):
    """Minkowski form along the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def _form(dim):
    j = np.eye(dim)
    j[0, 0] = -1.0
    return j


def _point_defect(c):
    # relative to x0^2 so that far-away points are judged fairly
    return abs(minkowski(c, c) + 1.0) / max(1.0, c[0] * c[0])


def _matrix_defect(m):
    # max|M^T J M - J| / max(1, max|M|^2), computed on M / max|M| to avoid overflow
    j = _form(m.shape[0])
    s = max(1.0, float(np.max(np.abs(m))))
    q = m / s
    return float(np.max(np.abs(q.T @ j @ q - j / (s * s))))


@dataclass(frozen=True, eq=False)
class HPoint:
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim != 1 or c.size < 3:
            raise GeometryError("an HPoint needs n+1 >= 3 coordinates")
        if c[0] < 1.0 - POINT_TOL:
            raise GeometryError(f"point is not on the future sheet (x0 = {c[0]})")
        if _point_defect(c) > POINT_TOL:
            raise GeometryError(f"<x,x> = {minkowski(c, c)!r}, expected -1")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self):
        return self.coords.size - 1

    def __repr__(self):
        return f"HPoint({np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True, eq=False)
class Isometry:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 3:
            raise GeometryError("an Isometry needs a square (n+1)x(n+1) matrix, n >= 2")
        if m[0, 0] <= 0:
            raise GeometryError("matrix does not preserve the future sheet")
        if _matrix_defect(m) > MATRIX_TOL:
            raise GeometryError(f"matrix is not Lorentzian (defect {_matrix_defect(m):.2e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self):
        return self.matrix.shape[0] - 1

    def __matmul__(self, other):
        if isinstance(other, Isometry):
            return compose(self, other)
        if isinstance(other, HPoint):
            return apply(self, other)
        return NotImplemented


def project_to_hyperboloid(c):
    """Recompute x0 from the spatial part; exact up to rounding."""
    c = np.array(c, dtype=float)
    c[..., 0] = np.sqrt(1.0 + np.sum(c[..., 1:] ** 2, axis=-1))
    return c


def origin(n):
    if n < 2:
        raise GeometryError(f"dimension must be at least 2, got {n}")
    c = np.zeros(n + 1)
    c[0] = 1.0
    return HPoint(c)


def point_from_coords(coords):
    return HPoint(project_to_hyperboloid(coords))


def dist(x, y):
    """Hyperbolic distance arcosh(-<x, y>)."""
    xc = x.coords if isinstance(x, HPoint) else np.asarray(x, dtype=float)
    yc = y.coords if isinstance(y, HPoint) else np.asarray(y, dtype=float)
    if xc.shape[-1] != yc.shape[-1]:
        raise GeometryError("dimension mismatch")
    return np.arccosh(np.maximum(-minkowski(xc, yc), 1.0))


def identity(n):
    return Isometry(np.eye(n + 1))


def boost(rapidity, axis, n):
    """Hyperbolic translation by ``rapidity`` along the coordinate axis ``axis``."""
    if not 1 <= axis <= n:
        raise GeometryError(f"axis must be in 1..{n}, got {axis}")
    m = np.eye(n + 1)
    ch, sh = np.cosh(rapidity), np.sinh(rapidity)
    m[0, 0] = m[axis, axis] = ch
    m[0, axis] = m[axis, 0] = sh
    return Isometry(m)


def rotation(i, j, angle, n):
    """Rotation by ``angle`` in the spatial (i, j) plane; fixes the origin."""
    if not (1 <= i <= n and 1 <= j <= n and i != j):
        raise GeometryError(f"bad rotation plane ({i}, {j}) for n = {n}")
    m = np.eye(n + 1)
    c, s = np.cos(angle), np.sin(angle)
    m[i, i] = m[j, j] = c
    m[i, j], m[j, i] = -s, s
    return Isometry(m)


def inverse(a):
    j = _form(a.matrix.shape[0])
    return Isometry(j @ a.matrix.T @ j)


def reorthonormalize(m):
    """Gram-Schmidt on the columns of ``m`` with respect to the Minkowski form."""
    m = np.array(m, dtype=float)
    cols = m.T.copy()
    c0 = cols[0]
    c0 = c0 / np.sqrt(-minkowski(c0, c0))
    if c0[0] < 0:
        c0 = -c0
    cols[0] = c0
    for k in range(1, cols.shape[0]):
        v = cols[k]
        v = v + minkowski(v, cols[0]) * cols[0]
        for i in range(1, k):
            v = v - minkowski(v, cols[i]) * cols[i]
        cols[k] = v / np.sqrt(minkowski(v, v))
    return cols.T


def renormalize_if_safe(m):
    """Re-orthonormalize when well conditioned, otherwise only check the defect."""
    m = np.asarray(m, dtype=float)
    if float(np.max(np.abs(m))) <= RENORM_MAX_SCALE:
        return reorthonormalize(m)
    defect = _matrix_defect(m)
    if defect > BLOWUP_TOL:
        raise NumericalBlowupError(f"product left O+(n,1) (defect {defect:.2e}); word too long")
    return m


def compose(a, b, renormalize=False):
    if a.n != b.n:
        raise GeometryError("dimension mismatch")
    m = a.matrix @ b.matrix
    if renormalize:
        m = renormalize_if_safe(m)
    defect = _matrix_defect(m)
    if defect > BLOWUP_TOL:
        raise NumericalBlowupError(f"product left O+(n,1) (defect {defect:.2e}); word too long")
    if defect > MATRIX_TOL:
        m = renormalize_if_safe(m)
    return Isometry(m)


def compose_many(isometries):
    """Left-to-right product, re-orthonormalized every 16 factors."""
    it = iter(isometries)
    acc = next(it)
    for k, g in enumerate(it, start=1):
        acc = compose(acc, g, renormalize=(k % RENORM_EVERY == 0))
    return acc


def apply(a, x):
    if a.n != x.n:
        raise GeometryError("dimension mismatch")
    y = a.matrix @ x.coords
    if _point_defect(y) > BLOWUP_TOL:
        raise NumericalBlowupError("image point left the hyperboloid")
    return HPoint(project_to_hyperboloid(y))


def exp_origin(v):
    """Exponential map at the origin: the point at distance |v| in direction v."""
    v = np.asarray(v, dtype=float)
    r = float(np.linalg.norm(v))
    c = np.empty(v.size + 1)
    c[0] = np.cosh(r)
    c[1:] = v * (np.sinh(r) / r) if r > 0 else 0.0
    return HPoint(project_to_hyperboloid(c))


def random_rotation(n, rng):
    """Uniform element of SO(n) acting on the spatial coordinates."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    m = np.eye(n + 1)
    m[1:, 1:] = q
    return Isometry(m)


def random_point(n, rng, radius=2.0):
    """Point at geodesic distance uniform in [0, radius] in a uniform direction."""
    d = rng.standard_normal(n)
    d /= np.linalg.norm(d)
    return exp_origin(d * rng.uniform(0.0, radius))


def random_isometry(n, rng, max_shift=2.0):
    """Rotation followed by a translation of length at most ``max_shift``."""
    rot = random_rotation(n, rng)
    shift = boost(rng.uniform(0.0, max_shift), 1, n)
    rot2 = random_rotation(n, rng)
    return compose(compose(rot2, shift), rot)
