"""Exponent arithmetic for Strichartz estimates and small-data global well-posedness.

Exponent pairs are stored as reciprocals (1/p, 1/q) in [0, 1/2]^2.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

ORDER_TOL = 1e-12
# absorbs rounding in 1/q arithmetic on region boundaries
EDGE_TOL = 1e-12


@dataclass(frozen=True)
class ExponentPair:
    inv_p: float
    inv_q: float

    def __post_init__(self):
        for name in ("inv_p", "inv_q"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 0.5):
                raise ValueError(f"{name} = {v} must lie in [0, 1/2]")

    @classmethod
    def from_exponents(cls, p, q):
        return cls(1.0 / p, 1.0 / q)


def _check_dim(n, least):
    if int(n) != n or n < least:
        raise ValueError(f"dimension n = {n} must be an integer >= {least}")


def _open_square(pair):
    return 0.0 < pair.inv_p < 0.5 and 0.0 < pair.inv_q < 0.5


def is_admissible(n, pair):
    _check_dim(n, 2)
    if _near(pair, 0.0, 0.5):
        return True
    excess = _excess(n, pair)
    if n >= 4:
        if _near(pair, 0.5, 0.5 - 1.0 / (n - 1)):
            return True
        return _open_square(pair) and excess <= EDGE_TOL
    if n == 3:
        # lower edge drawn solid, top and right edges dashed
        return _open_square(pair) and excess <= EDGE_TOL
    return _open_square(pair) and excess < -EDGE_TOL


def _near(pair, inv_p, inv_q):
    return abs(pair.inv_p - inv_p) <= EDGE_TOL and abs(pair.inv_q - inv_q) <= EDGE_TOL


def _excess(n, pair):
    """((n-1)/2)(1/2 - 1/q) - 1/p, nonpositive on the admissible triangle."""
    return 0.5 * (n - 1) * (0.5 - pair.inv_q) - pair.inv_p


def sigma_pq(n, pair):
    """((n+1)/2)(1/2 - 1/q) + max(0, ((n-1)/2)(1/2 - 1/q) - 1/p)."""
    _check_dim(n, 2)
    excess = _excess(n, pair)
    return 0.5 * (n + 1) * (0.5 - pair.inv_q) + (excess if excess > EDGE_TOL else 0.0)


@dataclass(frozen=True)
class GwpThresholds:
    gamma1: float
    gamma2: float
    gamma_c: float
    gamma3: float
    gamma4: float

    def __post_init__(self):
        vals = self.as_tuple()
        if any(not v > 1.0 for v in vals):
            raise ValueError(f"thresholds must exceed 1: {vals}")
        if any(a > b + ORDER_TOL for a, b in zip(vals, vals[1:])):
            raise ValueError(f"thresholds out of order: {vals}")

    def as_tuple(self):
        return (self.gamma1, self.gamma2, self.gamma_c, self.gamma3, self.gamma4)


def gwp_thresholds(n):
    _check_dim(n, 3)
    gamma1 = 1.0 + 3.0 / n
    gamma2 = 1.0 + 2.0 / ((n - 1) / 2.0 + 2.0 / (n - 1))
    gamma_c = 1.0 + 4.0 / (n - 1)
    if n <= 5:
        b = (6 - n) / 2.0 + 2.0 / (n - 1)
        gamma3 = ((n + 6) / 2.0 + 2.0 / (n - 1) + math.sqrt(4 * n + b * b)) / n
        gamma4 = 1.0 + 4.0 / (n - 2)
    else:
        gamma3 = 1.0 + 2.0 / ((n - 1) / 2.0 - 1.0 / (n - 1))
        b = (n - 3) / 2.0 + 3.0 / (n + 1)
        gamma4 = (n - 1) / 2.0 + 3.0 / (n + 1) - math.sqrt(b * b - 4.0 * (n - 1) / (n + 1))
    return GwpThresholds(gamma1, gamma2, gamma_c, gamma3, gamma4)


def sigma1(n, gamma):
    return (n + 1) / 4.0 - (n + 1) * (n + 5) / (8.0 * n) / (gamma - (n + 1) / (2.0 * n))


def sigma2(n, gamma):
    return (n + 1) / 4.0 - 1.0 / (gamma - 1.0)


def sigma3(n, gamma):
    return n / 2.0 - 2.0 / (gamma - 1.0)


@dataclass(frozen=True)
class Regularity:
    """Required regularity for a power gamma.

    ``open_threshold`` marks any small positive sigma (reported as 0).
    ``sigma`` is None when gamma lies above gamma4.
    """

    sigma: object
    branch: str
    open_threshold: bool = False

    @property
    def above_gamma4(self):
        return self.sigma is None


def gwp_regularity(n, gamma):
    _check_dim(n, 3)
    if not gamma > 1.0:
        raise ValueError(f"gamma = {gamma} must exceed 1")
    th = gwp_thresholds(n)
    if gamma <= th.gamma1:
        return Regularity(0.0, "zero_plus", open_threshold=True)
    # for n = 3 gamma1 == gamma2 and this branch is empty
    if gamma <= th.gamma2:
        return Regularity(sigma1(n, gamma), "sigma1")
    if gamma <= th.gamma_c:
        return Regularity(sigma2(n, gamma), "sigma2")
    if gamma <= th.gamma4:
        return Regularity(sigma3(n, gamma), "sigma3")
    return Regularity(None, "above_gamma4")


def sobolev_embedding_ok(n, sigma1_, q1, sigma2_, q2):
    """Whether H^{sigma1, q1} embeds in H^{sigma2, q2}."""
    for q in (q1, q2):
        if not 1.0 < q < math.inf:
            raise ValueError(f"exponent {q} must lie in (1, inf)")
    drop = n / q1 - n / q2
    return sigma1_ - sigma2_ >= drop >= 0.0


def admissible_raster(n, count=51):
    """Rows (inv_p, inv_q, admissible, sigma_pq) on a count x count grid of [0, 1/2]^2."""
    if count < 2:
        raise ValueError("raster needs at least 2 points per axis")
    axis = np.linspace(0.0, 0.5, count)
    rows = []
    for ip in axis:
        for iq in axis:
            pair = ExponentPair(float(ip), float(iq))
            rows.append((pair.inv_p, pair.inv_q, is_admissible(n, pair), sigma_pq(n, pair)))
    return rows


def raster_csv(n, count=51):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["inv_p", "inv_q", "admissible", "sigma_pq"])
    for ip, iq, ok, s in admissible_raster(n, count):
        w.writerow([format(ip, ".17g"), format(iq, ".17g"), int(ok), format(s, ".17g")])
    return buf.getvalue()
