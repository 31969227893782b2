"""Complex log-Gamma by the Lanczos approximation.

Uses the 15-term coefficient set for g = 607/128 and the reflection formula
for Re z < 1/2. Only exp(loggamma) and Re(loggamma) are meaningful to the
callers, so the imaginary part is returned on whatever branch falls out of
the formula rather than the principal branch of scipy's ``loggamma``.
"""

import math

import numpy as np

from hyperwave._accel import njit, numba_enabled

LANCZOS_G = 607.0 / 128.0
LANCZOS_COEFFS = np.array([
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
])
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)
_LOG_2I = complex(math.log(2.0), math.pi / 2.0)


def _lanczos_np(z):
    # valid for Re z >= 1/2
    ser = np.full(z.shape, LANCZOS_COEFFS[0], dtype=complex)
    for k in range(1, LANCZOS_COEFFS.size):
        ser = ser + LANCZOS_COEFFS[k] / (z + (k - 1))
    # ser here is built for Gamma(z) via z-1 shift
    zm = z - 1.0
    tmp = zm + LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (zm + 0.5) * np.log(tmp) - tmp + np.log(ser)


def _log_sin_pi_np(z):
    # log(sin(pi z)) without overflow for large |Im z|
    out = np.empty(z.shape, dtype=complex)
    upper = z.imag >= 0
    zu = z[upper]
    out[upper] = -1j * np.pi * zu + np.log(np.exp(2j * np.pi * zu) - 1.0) - _LOG_2I
    zl = z[~upper]
    out[~upper] = 1j * np.pi * zl + np.log(1.0 - np.exp(-2j * np.pi * zl)) - _LOG_2I
    return out


def _loggamma_np(z):
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    right = z.real >= 0.5
    out[right] = _lanczos_np(z[right])
    zl = z[~right]
    if zl.size:
        out[~right] = _LOG_PI - _log_sin_pi_np(zl) - _lanczos_np(1.0 - zl)
    return out


@njit
def _lanczos_scalar(z):
    ser = LANCZOS_COEFFS[0] + 0j
    for k in range(1, LANCZOS_COEFFS.size):
        ser += LANCZOS_COEFFS[k] / (z + (k - 1))
    zm = z - 1.0
    tmp = zm + LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (zm + 0.5) * np.log(tmp) - tmp + np.log(ser)


@njit
def loggamma_scalar(z):
    """Scalar complex log-Gamma, compiled."""
    if z.real >= 0.5:
        return _lanczos_scalar(z)
    if z.imag >= 0:
        ls = -1j * np.pi * z + np.log(np.exp(2j * np.pi * z) - 1.0) - _LOG_2I
    else:
        ls = 1j * np.pi * z + np.log(1.0 - np.exp(-2j * np.pi * z)) - _LOG_2I
    return _LOG_PI - ls - _lanczos_scalar(1.0 - z)


@njit
def _loggamma_nb(z):
    out = np.empty(z.shape, dtype=np.complex128)
    for i in range(z.size):
        out[i] = loggamma_scalar(z[i])
    return out


def loggamma(z):
    """log Gamma(z) for complex arrays or scalars.

    For Re z >= 1/2 this is the principal log-gamma. Left of that line the
    reflection formula is used and the imaginary part may differ from the
    principal branch by a multiple of 2 pi; exp() and the real part are
    unaffected. Poles (nonpositive integers) give a real part of +inf.
    """
    arr = np.asarray(z, dtype=complex)
    flat = arr.ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        if numba_enabled():
            res = _loggamma_nb(np.ascontiguousarray(flat))
        else:
            res = _loggamma_np(flat)
    poles = (flat.imag == 0) & (flat.real <= 0) & (flat.real == np.round(flat.real))
    res[poles] = complex(np.inf, 0.0)
    res = res.reshape(arr.shape)
    return res[()] if res.ndim == 0 else res


def gamma(z):
    return np.exp(loggamma(z))


def rgamma(z):
    """Reciprocal Gamma, entire; exactly zero at 0, -1, -2, ..."""
    arr = np.asarray(z, dtype=complex)
    lg = np.atleast_1d(loggamma(arr))
    out = np.where(np.isinf(lg.real), 0.0, np.exp(-lg))
    out = out.reshape(arr.shape)
    return out[()] if out.ndim == 0 else out
