import math

import pytest
from scipy import special

import asymptotics
from bernstein import BoundedRatio, Identity, Log, PowerShifted, gauss_laguerre
from errors import DomainError, InapplicableError, ParameterError

ROOT_2PI = math.sqrt(2 * math.pi)


def _normal(variance=1.0):
    return asymptotics.AsymptoticModel(lambda y: 1.0 / math.sqrt(2 * math.pi * variance),
                                       lambda y: y * y / (2.0 * variance),
                                       lambda y: y / variance,
                                       lambda y: 1.0 / variance)


def _unit_scale():
    return asymptotics.AsymptoticModel(lambda y: 1.0, lambda y: 0.0, lambda y: 0.0, lambda y: 1.0)


def test_legendre_data_of_identity():
    data = asymptotics.legendre_data(Identity())
    assert data.G(10.0) == pytest.approx(10.0 * math.log(10.0) - 9.0, rel=1e-10)
    assert data.L_G(1.0) == pytest.approx(math.e - 1.0, rel=1e-10)
    assert data.s_G(9.0) == pytest.approx(3.0)


@pytest.mark.parametrize("phi", [Identity(), PowerShifted(0.5, 1.0), Log(1.0)])
def test_legendre_conjugacy(phi):
    data = asymptotics.legendre_data(phi)
    for u in (2.0, 20.0, 200.0):
        y = float(phi.log_eval(u))
        assert data.G(u) + data.L_G(y) == pytest.approx(u * y, rel=1e-9)


def test_legendre_data_needs_unbounded_phi():
    with pytest.raises(DomainError):
        asymptotics.legendre_data(BoundedRatio())


def test_self_neglecting_square_root():
    report = asymptotics.self_neglecting_check(math.sqrt, [1e2, 1e4, 1e6], [1.0])
    assert report.passed
    assert report.deviations[0] == pytest.approx((0.0488088, 0.0049876, 0.00049988), rel=1e-4)
    assert report.max_deviation == pytest.approx(report.deviations[0][0])


def test_self_neglecting_constant_and_linear():
    assert asymptotics.self_neglecting_check(lambda u: 2.0, [1.0, 10.0], [0.5, 1.0]).passed
    linear = asymptotics.self_neglecting_check(lambda u: u, [1e2, 1e4, 1e6], [0.5])
    assert not linear.passed
    assert linear.max_deviation == pytest.approx(0.5)


def test_self_neglecting_needs_positive_scale():
    with pytest.raises(DomainError):
        asymptotics.self_neglecting_check(lambda u: 0.0, [1.0, 2.0], [1.0])


def test_flatness():
    model = _unit_scale()
    assert asymptotics.flatness_check(lambda u: u * u, model, [10.0, 100.0, 1000.0], [0.5, 1.0]).passed
    assert not asymptotics.flatness_check(lambda u: math.exp(u * u), model, [1.0, 2.0, 3.0], [1.0]).passed


def test_asym_density_of_identity():
    assert asymptotics.asym_density(Identity(), 1.0, 10.0, C_phi=ROOT_2PI) == pytest.approx(
        math.exp(-10.0), rel=1e-10)
    assert asymptotics.asym_density(Identity(), 1.0, 10.0, n=1, C_phi=ROOT_2PI) == pytest.approx(
        -math.exp(-10.0), rel=1e-10)
    expected = math.sqrt(math.pi / 5.0) * math.exp(-10.0)
    assert asymptotics.asym_density(Identity(), 2.0, 25.0, C_phi=ROOT_2PI) == pytest.approx(expected, rel=1e-10)


def test_asym_density_matches_bessel_tail():
    exact = 2.0 * special.k0(2.0 * math.sqrt(400.0))
    approx = asymptotics.asym_density(Identity(), 2.0, 400.0, C_phi=ROOT_2PI)
    assert approx == pytest.approx(exact, rel=0.01)


def test_derivative_multiplier():
    base = asymptotics.asym_density(Identity(), 2.0, 25.0, C_phi=ROOT_2PI)
    second = asymptotics.asym_density(Identity(), 2.0, 25.0, n=2, C_phi=ROOT_2PI)
    assert second / base == pytest.approx((5.0 / 25.0) ** 2, rel=1e-12)
    sign, log_abs = asymptotics.log_asym_density(Identity(), 2.0, 25.0, n=3, C_phi=ROOT_2PI)
    assert sign == -1.0
    assert math.exp(log_abs) == pytest.approx(abs(base) * (5.0 / 25.0) ** 3, rel=1e-10)


@pytest.mark.parametrize("t, n", [(1.0, 0), (2.0, 0), (2.0, 1), (3.0, 2)])
def test_drift_form_collapses_for_identity(t, n):
    xi = 12.0 ** t
    plain = asymptotics.asym_density(Identity(), t, xi, n=n, C_phi=1.3)
    drift = asymptotics.asym_density_drift(Identity(), t, xi, n=n, C_phi=1.3)
    assert drift == pytest.approx(plain, rel=1e-10)


@pytest.mark.parametrize("t", [1.0, 2.0])
def test_regvar_form_collapses_for_pure_power(t):
    phi = PowerShifted(0.5, 0.0)
    xi = 6.0 ** t
    plain = asymptotics.asym_density(phi, t, xi, C_phi=1.7)
    regvar = asymptotics.asym_density_regvar(phi, t, xi, C_phi=1.7)
    assert regvar == pytest.approx(plain, rel=1e-9)


def test_drift_and_regvar_gates():
    with pytest.raises(InapplicableError):
        asymptotics.asym_density_drift(PowerShifted(0.5, 0.0), 1.0, 10.0, C_phi=1.0)
    with pytest.raises(InapplicableError):
        asymptotics.asym_density_regvar(Identity(), 1.0, 10.0, C_phi=1.0)


def test_gauss_laguerre_tail_in_log_space():
    phi = gauss_laguerre(0.5, 1.0)
    xi = 100.0
    sign, log_abs = asymptotics.log_asym_density(phi, 1.0, xi)
    closed = math.log(2.0) + 2.0 * math.log(xi) - xi * xi - special.gammaln(1.5)
    assert sign == 1.0
    assert math.exp(log_abs - closed) == pytest.approx(1.0, abs=0.03)


def test_power_and_levy_views():
    direct = asymptotics.asym_density(Identity(), 1.0, 3.0, C_phi=ROOT_2PI)
    assert asymptotics.asym_power_density(Identity(), 1.0, 3.0, C_phi=ROOT_2PI) == pytest.approx(direct)
    squared = asymptotics.asym_power_density(Identity(), 2.0, 16.0, C_phi=ROOT_2PI)
    assert squared == pytest.approx(math.exp(-4.0) / 8.0, rel=1e-10)
    y = math.log(12.0)
    assert asymptotics.asym_levy_density(Identity(), 1.0, y, C_phi=ROOT_2PI) == pytest.approx(
        12.0 * math.exp(-12.0), rel=1e-10)


def test_urbanik_classical():
    assert asymptotics.urbanik_classical(1.0, 7.0) == pytest.approx(math.exp(-7.0), rel=1e-12)
    assert asymptotics.urbanik_classical(1.0, 7.0, n=1) == pytest.approx(-math.exp(-7.0), rel=1e-12)
    expected = math.sqrt(math.pi) * 49.0 ** -0.25 * math.exp(-14.0)
    assert asymptotics.urbanik_classical(2.0, 49.0) == pytest.approx(expected, rel=1e-12)
    for t, n in ((1.0, 2), (2.0, 1), (3.0, 0)):
        xi = 30.0 ** t
        assert asymptotics.urbanik_classical(t, xi, n) == pytest.approx(
            asymptotics.asym_density(Identity(), t, xi, n=n, C_phi=ROOT_2PI), rel=1e-9)


@pytest.mark.parametrize("lam, t", [(1.0, 1.0), (1.0, 2.0), (0.5, 1.5)])
def test_log_family_display(lam, t):
    x = 10.0
    display = asymptotics.log_family_display(lam, t, x, as_log=True)
    sign, log_abs = asymptotics.log_asym_density(Log(lam), t, x ** t, C_phi=1.0)
    assert sign == 1.0
    assert log_abs == pytest.approx(display, abs=1e-4)


def test_tail_gates():
    with pytest.raises(InapplicableError):
        asymptotics.asym_density(BoundedRatio(), 1.0, 10.0, C_phi=1.0)
    with pytest.raises(DomainError):
        asymptotics.asym_density(Identity(), 1.0, 0.5, C_phi=1.0)
    with pytest.raises(ParameterError):
        asymptotics.asym_density(Identity(), 0.0, 10.0, C_phi=1.0)


def test_convolving_equal_normals():
    normal = _normal()
    for y in (0.5, 2.0, 4.0):
        psi0, eta0 = asymptotics.gaussian_tail_convolve(normal, normal, y)
        assert psi0 == pytest.approx(y * y / 4.0, rel=1e-12)
        assert eta0 == pytest.approx(1.0 / math.sqrt(4 * math.pi), rel=1e-12)


def test_convolving_unequal_normals():
    psi0, eta0 = asymptotics.gaussian_tail_convolve(_normal(1.0), _normal(4.0), 3.0)
    assert psi0 == pytest.approx(0.9, rel=1e-10)
    assert eta0 == pytest.approx(1.0 / math.sqrt(10 * math.pi), rel=1e-10)


def test_dfold_of_normals():
    normal = _normal()
    for y in (0.0, 2.0):
        exact = math.exp(-y * y / 8.0) / math.sqrt(8 * math.pi)
        assert asymptotics.dfold(normal, 4, y) == pytest.approx(exact, rel=1e-12)
    assert asymptotics.dfold(normal, 1, 1.5) == pytest.approx(normal.density(1.5), rel=1e-14)
    assert asymptotics.dfold(normal, 2, 1.0, as_log=True) == pytest.approx(-0.25 - 0.5 * math.log(4 * math.pi))
    with pytest.raises(ParameterError):
        asymptotics.dfold(normal, 0, 1.0)
    with pytest.raises(ParameterError):
        asymptotics.dfold(normal, 1.5, 1.0)


def test_semigroup_tail_model_of_identity():
    model = asymptotics.semigroup_tail_model(Identity(), 1.0, C_phi=ROOT_2PI)
    y = math.log(10.0)
    assert model.density(y) == pytest.approx(10.0 * math.exp(-10.0), rel=1e-10)
    assert model.psi_prime(y) == pytest.approx(10.0)
    assert model.s_psi(y) == pytest.approx(1.0 / math.sqrt(10.0))
