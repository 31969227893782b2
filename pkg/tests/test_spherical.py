import math

import numpy as np
import pytest
from scipy import integrate

from hyperwave import spherical as sp


def closed_phi3(lam, r):
    return np.sin(lam * r) / (lam * np.sinh(r))


def theta_oracle(n, lam, r):
    # phi_lam(r) = c_n int_0^pi (cosh r - sinh r cos th)^(-(i lam + rho)) sin^(n-2) th dth
    rho = 0.5 * (n - 1)

    def part(th, which):
        base = math.cosh(r) - math.sinh(r) * math.cos(th)
        val = base ** (-rho) * np.exp(-1j * lam * math.log(base)) * math.sin(th) ** (n - 2)
        return val.real if which == 0 else val.imag

    norm = integrate.quad(lambda th: math.sin(th) ** (n - 2), 0, math.pi)[0]
    re = integrate.quad(part, 0, math.pi, args=(0,), epsabs=1e-13, epsrel=1e-13, limit=400)[0]
    im = integrate.quad(part, 0, math.pi, args=(1,), epsabs=1e-13, epsrel=1e-13, limit=400)[0]
    return complex(re, im) / norm


def test_space_validation():
    assert sp.space(3).rho == 1.0
    assert sp.space(4).rho == 1.5
    with pytest.raises(ValueError):
        sp.space(1)
    with pytest.raises(ValueError):
        sp.SpaceParams(3, m_2alpha=1.0)


def test_phi_at_origin_is_one(backend):
    for n in (2, 3, 4):
        vals = sp.phi_values(sp.space(n), np.array([0.0, 0.5, 3.0, 40.0]), 0.0)
        assert np.array_equal(vals, np.ones(4))


def test_phi_matches_closed_form_n3(backend):
    p = sp.space(3)
    lams = np.array([0.3, 1.0, 2.0, 7.5, 30.0])
    for r in (0.05, 0.5, 1.0, 3.0, 8.0):
        got = sp.phi_values(p, lams, r)
        assert np.max(np.abs(got - closed_phi3(lams, r))) < 1e-10


def test_phi0_examples(backend):
    p = sp.space(3)
    assert sp.phi0(p, 1.0) == pytest.approx(1.0 / math.sinh(1.0), rel=1e-10)
    assert sp.phi0(p, 0.0) == 1.0


def test_phi_bounded_by_phi0(backend):
    for n in (2, 3, 4):
        p = sp.space(n)
        lams = np.linspace(0.0, 20.0, 81)
        for r in (0.3, 1.0, 4.0):
            assert np.all(np.abs(sp.phi_values(p, lams, r)) <= sp.phi0(p, r) * (1 + 1e-9))


@pytest.mark.parametrize("n", [2, 4, 5])
def test_phi_matches_theta_integral(backend, n):
    p = sp.space(n)
    for lam in (0.4, 2.0, 6.0):
        for r in (0.2, 1.5, 4.0):
            assert sp.phi_lambda(p, lam, r) == pytest.approx(theta_oracle(n, lam, r), abs=1e-9)


def test_complex_lambda_against_oracle():
    p = sp.space(3)
    # phi_{i rho} = 1 for every radius
    assert sp.phi_lambda(p, 1j * p.rho, 2.0) == pytest.approx(1.0, abs=1e-10)
    lam = 1.2 + 0.3j
    r = 1.1
    assert sp.phi_lambda(p, lam, r) == pytest.approx(closed_phi3(lam, r), abs=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_series_and_quadrature_agree(backend, n):
    p = sp.space(n)
    lams = np.array([2.5, 5.0, 12.0, 40.0])
    for r in (0.5, 2.0, 6.0):
        q = sp.phi_values(p, lams, r, method="quadrature")
        s = sp.phi_values(p, lams, r, method="series")
        assert np.max(np.abs(q - s)) < 1e-9 * sp.phi0(p, r) + 1e-13


def test_series_rejects_zero_lambda():
    with pytest.raises(ValueError):
        sp.phi_values(sp.space(3), np.array([0.0, 1.0]), 1.0, method="series")
    with pytest.raises(ValueError):
        sp.phi_values(sp.space(3), np.array([1.0]), -1.0)


def test_plancherel_density_examples():
    p = sp.space(3)
    assert sp.plancherel_density(p, 0.0) == 0.0
    # n = 3: |c(lam)|^-2 = lam^2
    assert sp.plancherel_density(p, 2.0) / sp.plancherel_density(p, 1.0) == pytest.approx(4.0)
    lams = np.array([0.3, 1.7, 5.0])
    assert np.array_equal(sp.plancherel_density(p, lams), sp.plancherel_density(p, -lams))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_plancherel_growth(n):
    p = sp.space(n)
    lam = np.geomspace(1e2, 1e3, 20)
    slope = np.polyfit(np.log(lam), np.log(sp.plancherel_density(p, lam)), 1)[0]
    assert slope == pytest.approx(n - 1, abs=1e-3)


def test_c_function_normalization():
    for n in (2, 3, 4, 6):
        p = sp.space(n)
        assert abs(sp.c_function(p, -1j * p.rho) - 1.0) < 1e-12


def test_zero_function_transform():
    p = sp.space(3)
    f = sp.RadialFunction.from_callable(np.zeros_like, 5.0)
    assert np.all(sp.spherical_transform(p, f, np.array([0.0, 1.0, 3.0])) == 0)


def test_transform_of_gaussian_closed_form():
    p = sp.space(3)
    # for n = 3, H[f](lam) = 4 pi int f(r) sin(lam r) sinh(r) / lam dr
    f = sp.RadialFunction.from_callable(lambda r: np.exp(-r * r), 12.0)
    for lam in (0.5, 2.0):
        ref = integrate.quad(
            lambda r: 4 * math.pi * math.exp(-r * r) * math.sin(lam * r) * math.sinh(r) / lam,
            0, 12, epsabs=1e-13, limit=200)[0]
        assert sp.spherical_transform(p, f, lam).real == pytest.approx(ref, rel=1e-6)


def test_divergent_tail_reported():
    p = sp.space(3)
    f = sp.RadialFunction.from_callable(lambda r: np.exp(-0.5 * r), 6.0)
    with pytest.raises(sp.DivergentTailError) as info:
        sp.spherical_transform(p, f, 1.0)
    assert info.value.tail_estimate > 0


def test_radial_function_refuses_extrapolation():
    f = sp.RadialFunction.from_callable(np.cos, 2.0)
    with pytest.raises(ValueError):
        f(2.5)
    with pytest.raises(ValueError):
        sp.RadialFunction([0.1, 0.2, 0.3, 0.4], [1, 2, 3, 4])


@pytest.mark.parametrize("n", [2, 3, 4])
def test_round_trip(n):
    p = sp.space(n)

    def ghat(lam):
        return np.exp(-np.asarray(lam) ** 2)

    f = sp.RadialFunction.from_callable(lambda r: sp.inverse_transform(p, ghat, r).real, 24.0)
    probe = np.array([0.3, 1.0, 2.0])
    assert np.max(np.abs(sp.spherical_transform(p, f, probe).real - ghat(probe))) < 1e-6


def test_inversion_constant_calibration():
    for n in (2, 3, 4):
        p = sp.space(n)
        assert sp.calibrate_inversion_constant(p) == pytest.approx(p.inversion_constant, rel=1e-6)
    # n = 3 closed form: 1 / (2 pi^2)
    assert sp.space(3).inversion_constant == pytest.approx(1 / (2 * math.pi ** 2))
