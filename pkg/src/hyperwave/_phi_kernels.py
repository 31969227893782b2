"""Inner loops for spherical functions on H^n.

Two routes, each with a compiled and a numpy implementation:

* quadrature: phi_lam(r) as a cosine transform over s in [0, r], written in
  the angle beta with s = r cos(beta) so that the integrand is smooth for
  every n (the endpoint factor (cosh r - cosh s)^((n-3)/2) is absorbed);
* series: the Harish-Chandra expansion phi = 2 Re(c(lam) Phi_lam(r)) with
  Phi_lam(r) = exp((i lam - rho) r) * sum_k G_k exp(-2 k r), valid for real
  lam != 0 and r > 0, fast when lam * r is large.
"""

import math

import numpy as np

from hyperwave._accel import njit, numba_enabled
from hyperwave.gamma import loggamma, loggamma_scalar

SERIES_TOL = 1e-17
SERIES_MAX_TERMS = 20000
_CHUNK = 1 << 14


def beta_amplitude(n, r, beta, weights):
    """Weights times r sin(beta) times the endpoint factor at s = r cos(beta)."""
    r_minus_s = 2.0 * r * np.sin(0.5 * beta) ** 2
    r_plus_s = 2.0 * r * np.cos(0.5 * beta) ** 2
    base = (-np.expm1(-r_minus_s)) * (-np.expm1(-r_plus_s))
    power = 0.5 * (n - 3)
    with np.errstate(divide="ignore"):
        k = base ** power if power != 0 else np.ones_like(base)
    return weights * r * np.sin(beta) * k, r * np.cos(beta)


def quad_prefactor(n, r):
    rho = 0.5 * (n - 1)
    c_n = math.sqrt(math.pi) * math.exp(math.lgamma(0.5 * (n - 1)) - math.lgamma(0.5 * n))
    return 2.0 ** (n - 1) * math.exp(-rho * r) / (c_n * (-math.expm1(-2.0 * r)) ** (n - 2))


def _cos_sum_np(lams, s, amp):
    out = np.empty(lams.shape, dtype=np.result_type(lams, float))
    for i in range(0, lams.size, _CHUNK):
        blk = lams[i:i + _CHUNK]
        out[i:i + _CHUNK] = np.cos(np.multiply.outer(blk, s)) @ amp
    return out


@njit
def _cos_sum_nb(lams, s, amp):
    out = np.empty(lams.size)
    for i in range(lams.size):
        lam = lams[i]
        acc = 0.0
        for j in range(s.size):
            acc += amp[j] * math.cos(lam * s[j])
        out[i] = acc
    return out


def cos_sum(lams, s, amp):
    """sum_j amp_j cos(lam_i s_j) for each lam_i."""
    if numba_enabled() and not np.iscomplexobj(lams):
        return _cos_sum_nb(np.ascontiguousarray(lams, dtype=float), s, amp)
    return _cos_sum_np(lams, s, amp)


def _log_c_np(lams, m_alpha, m_2alpha, log_c0):
    z = 1j * lams
    return (log_c0 - z * math.log(2.0) + loggamma(z)
            - loggamma(0.5 * (z + 0.5 * m_alpha + 1.0))
            - loggamma(0.5 * (z + 0.5 * m_alpha + m_2alpha)))


def _series_np(lams, logc, r, n):
    rho = 0.5 * (n - 1)
    z = 1j * lams
    x = math.exp(-2.0 * r)
    total = np.ones(lams.shape, dtype=complex)
    g = np.ones(lams.shape, dtype=complex)
    acc = np.zeros(lams.shape, dtype=complex)
    xk = 1.0
    quiet = 0
    for k in range(1, SERIES_MAX_TERMS):
        acc = acc + g * (z - rho - 2.0 * (k - 1))
        g = -(n - 1) * acc / (2.0 * k * (k - z))
        xk *= x
        term = g * xk
        total = total + term
        if np.all(np.abs(term) <= SERIES_TOL * np.abs(total)):
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
    else:
        return np.full(lams.shape, np.nan)
    return 2.0 * np.real(np.exp(logc + (z - rho) * r) * total)


@njit
def _series_nb(lams, logc, r, n):
    rho = 0.5 * (n - 1)
    x = math.exp(-2.0 * r)
    out = np.empty(lams.size)
    for i in range(lams.size):
        z = 1j * lams[i]
        total = 1.0 + 0j
        g = 1.0 + 0j
        acc = 0j
        xk = 1.0
        quiet = 0
        done = False
        for k in range(1, SERIES_MAX_TERMS):
            acc += g * (z - rho - 2.0 * (k - 1))
            g = -(n - 1) * acc / (2.0 * k * (k - z))
            xk *= x
            term = g * xk
            total += term
            if abs(term) <= SERIES_TOL * abs(total):
                quiet += 1
                if quiet >= 2:
                    done = True
                    break
            else:
                quiet = 0
        if not done:
            out[i] = np.nan
            continue
        out[i] = 2.0 * (np.exp(logc[i] + (z - rho) * r) * total).real
    return out


def series(lams, r, n, logc):
    """phi_lam(r) from the expansion at infinity, given log c(lam).

    NaN marks entries where the series did not settle.
    """
    lams = np.ascontiguousarray(lams, dtype=float)
    logc = np.ascontiguousarray(logc, dtype=complex)
    if numba_enabled():
        return _series_nb(lams, logc, float(r), int(n))
    return _series_np(lams, logc, float(r), int(n))


@njit
def _log_c_nb(lams, m_alpha, m_2alpha, log_c0):
    out = np.empty(lams.size, dtype=np.complex128)
    log2 = math.log(2.0)
    for i in range(lams.size):
        z = 1j * lams[i]
        out[i] = (log_c0 - z * log2 + loggamma_scalar(z)
                  - loggamma_scalar(0.5 * (z + 0.5 * m_alpha + 1.0))
                  - loggamma_scalar(0.5 * (z + 0.5 * m_alpha + m_2alpha)))
    return out


def log_c(lams, m_alpha, m_2alpha, log_c0):
    """log c(lam) for real lam != 0."""
    lams = np.ascontiguousarray(lams, dtype=float)
    if numba_enabled():
        return _log_c_nb(lams, float(m_alpha), float(m_2alpha), complex(log_c0))
    return _log_c_np(lams, m_alpha, m_2alpha, log_c0)


def log_density(lams, m_alpha, m_2alpha, log_c0):
    """log |c(lam)|^-2 for real lam != 0."""
    return -2.0 * np.real(log_c(lams, m_alpha, m_2alpha, log_c0))
