import math

import numpy as np
import pytest
from scipy import integrate, stats

from critlab import bounds
from critlab.errors import ParameterError
from critlab.models import ErParams, IntersectionParams, QuantumParams, RegParams, cmax_batch
from critlab.randsrc import cut_gamma_atom


def test_thresholds_exact():
    assert bounds.lower_threshold(10**6, 16) == 625
    assert bounds.lower_threshold(1000, 1) == 100
    assert bounds.upper_threshold(1000, 1.5) == 150
    assert bounds.upper_threshold(10**4, 1) == 464
    assert bounds.ceil_n23_over(10**4) == 465
    # n^{2/3} = 100 exactly: the lower event is |C_max| < 50
    assert bounds.lower_threshold(1000, 2) == 50


def test_phi_values():
    assert bounds.phi(10, 100, 5, 2, 1) == pytest.approx(1.47)
    h = 1 / math.sqrt(2)
    assert bounds.phi(10, 100, h, 2, 1, p_tau1=0.2) == pytest.approx(0.2)
    assert bounds.phi(10, 10**12, 5, 2, 1) < 1e-9
    with pytest.raises(ParameterError):
        bounds.phi(10, 100, 5, 1.0, 1)


def test_jointprop():
    assert bounds.jointprop_value(0.1, 2, 100, 50) == pytest.approx(0.3)
    assert bounds.jointprop_value(1e-9, 2, 100, 1e9) < 1e-8
    assert bounds.is_vacuous(bounds.jointprop_value(1.0, 2, 100, 50))


def test_lower_tail_spec_examples():
    spec = bounds.lower_tail_spec("er", 10**6, 16)
    assert spec.h == pytest.approx(100 / 48)
    assert spec.T == 625 and spec.T_prime == 10**4
    reg = bounds.lower_tail_spec("regular", 10**6, 16, d=3)
    assert reg.h == pytest.approx(100 / 144)
    assert reg.sigma2 == 2
    with pytest.raises(ParameterError):
        bounds.lower_tail_spec("er", 1000, 100)
    with pytest.raises(ParameterError):
        bounds.lower_tail_spec("er", 1000, 150)


def test_lower_tail_spec_overrides():
    spec = bounds.lower_tail_spec("er", 10**4, 2, h=5.0, N2=465)
    assert spec.h == 5.0 and not spec.degenerate
    with pytest.raises(ParameterError):
        spec.with_overrides(bogus=1)


def test_er_moments():
    assert bounds.er_conditional_moments(100, 0.01, 1, 1) == pytest.approx((0.99, 1.9602))
    assert bounds.er_conditional_moments(10, 0.3, 5, 6) == (0.0, 0.0)


def test_intersection_moments():
    mean, m2 = bounds.intersection_conditional_moments(100, 100, 0.01, 1, 1, 0)
    assert mean == pytest.approx(0.985, abs=1e-3)
    assert mean == pytest.approx(99 * (1 - (1 - 1e-4) ** 100), rel=1e-12)
    assert bounds.intersection_conditional_moments(100, 100, 0.01, 1, 1, 100) == (0.0, 0.0)
    assert bounds.intersection_conditional_moments(50, 10, 1.0, 1, 1, 0)[0] == 49


def test_intersection_moments_by_conditioning():
    n, m, p, t, R, D = 60, 40, 0.05, 3, 2, 5
    M = n - (t - 1) - R
    Ns = np.arange(m - D + 1)
    w = stats.binom.pmf(Ns, m - D, p)
    q = 1 - (1 - p) ** Ns
    mean = np.sum(w * M * q)
    m2 = np.sum(w * (M * q * (1 - q) + (M * q) ** 2))
    got = bounds.intersection_conditional_moments(n, m, p, t, R, D)
    assert got == pytest.approx((mean, m2), rel=1e-12)


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_quantum_moments_by_quadrature(theta):
    n, lam, t, R = 50, 1.0, 4, 3
    M = n - (t - 1) - R
    b = 1 / (lam * n)

    def expect(f):
        body, _ = integrate.quad(lambda x: f(x) * x * math.exp(-x), 0, theta,
                                 epsabs=1e-14, epsrel=1e-13)
        return body + f(theta) * cut_gamma_atom(theta)

    Eq = expect(lambda x: -math.expm1(-b * x))
    Eq2 = expect(lambda x: math.expm1(-b * x) ** 2)
    mean, m2 = bounds.quantum_conditional_moments(n, theta, lam, t, R)
    assert abs(mean - M * Eq) < 1e-10
    assert abs(m2 - (M * Eq + M * (M - 1) * Eq2)) < 1e-10


def test_quantum_moments_limits():
    from critlab.randsrc import cut_gamma_mean
    n, theta, lam = 10**8, 1.3, 1.0
    mean, _ = bounds.quantum_conditional_moments(n, theta, lam, 1, 1)
    M = n - 1
    assert mean == pytest.approx(M * cut_gamma_mean(theta) / (lam * n), rel=1e-6)
    assert bounds.quantum_conditional_moments(100, 1e-9, 1.0, 1, 1)[0] < 1e-8


def test_check_conditions_large_n():
    assert bounds.check_conditions("er", 10**4).passed
    assert bounds.check_conditions("intersection", 10**4, beta=1.0).passed


def test_check_conditions_small_n_reports():
    rep = bounds.check_conditions("er", 10, A=1.5)
    assert isinstance(rep.violations, list)
    assert rep.notes


def test_chernoff():
    assert bounds.chernoff_binomial(100, 0.5, 10) == pytest.approx(
        math.exp(-100 / (100 + 20 / 3)))
    assert bounds.chernoff_binomial(100, 0.5, 10**6) < 1e-100
    exact = stats.binom.sf(59, 100, 0.5)
    assert exact <= bounds.chernoff_binomial(100, 0.5, 10)


def test_upper_tail_constants():
    er = bounds.upper_tail_constant(ErParams(10**6))
    assert er.computed == pytest.approx(6 * math.e, rel=1e-4)
    assert er.printed == pytest.approx(10 * math.e)
    reg = bounds.upper_tail_constant(RegParams(1000, 3))
    assert reg.printed == pytest.approx(40)
    assert reg.computed == pytest.approx(16)
    rig = bounds.upper_tail_constant(IntersectionParams(500))
    assert math.isfinite(rig.computed) and rig.printed is None


def test_intersection_increment_variance_by_simulation():
    n, m, p = 400, 300, 1 / math.sqrt(400 * 300)
    mean, var = bounds.intersection_increment_moments(n, m, p)
    rng = np.random.default_rng(3)
    N = rng.binomial(m, p, 400_000)
    X = rng.binomial(n, N * p)
    assert X.mean() == pytest.approx(mean, abs=4 * math.sqrt(var / len(X)))
    assert X.var() == pytest.approx(var, rel=0.02)


def test_quantum_decomposition():
    theta = 1.0
    dec = bounds.quantum_upper_decomposition(1000, theta, 1.0, 200, method="dp")
    assert dec.error == pytest.approx(2 * 1000 * (2 + math.exp(-1)) / 200**2)
    assert dec.main + dec.error == pytest.approx(dec.total)
    far = bounds.quantum_upper_decomposition(1000, theta, 1.0, 10**4, method="dp")
    assert far.total < dec.total


def test_quantum_decomposition_dominates_simulation():
    lam = 1.0
    beta = bounds.critical_beta(lam)
    dec = bounds.quantum_upper_decomposition(1000, lam * beta, lam, 200)
    assert dec.critical
    c, _ = cmax_batch(QuantumParams(1000), 5, 0, 4000)
    assert np.mean(c > 400) <= dec.total


def test_critical_curve():
    b1 = bounds.critical_beta(1.0)
    assert b1 == pytest.approx(1.1462, abs=1e-4)
    assert math.exp(-b1) * (2 + b1) == pytest.approx(1.0, abs=1e-12)
    for lam in (0.25, 0.5, 1.0, 1.5):
        assert abs(bounds.F_eval(bounds.critical_beta(lam), lam) - 1) < 1e-12
    assert bounds.F_eval(1e-6, 1.0) == pytest.approx(1e-6, rel=1e-5)
    lam = bounds.critical_lambda(2.0)
    assert abs(bounds.F_eval(2.0, lam) - 1) < 1e-12


def test_critical_curve_has_no_root_for_large_lambda():
    # F(beta, lam) < 2/lam, so F = 1 is impossible once lam >= 2
    for lam in (2.0, 4.0):
        with pytest.raises(ParameterError):
            bounds.critical_beta(lam)
    with pytest.raises(ParameterError):
        bounds.critical_lambda(0.9)


def test_simple_graph_factor():
    c3, f3 = bounds.simple_graph_factor(3)
    assert c3 == pytest.approx(math.exp(-2)) and f3 == pytest.approx(14.78, abs=0.01)
    assert bounds.simple_graph_factor(4)[0] == pytest.approx(math.exp(-15 / 4))
    assert bounds.simple_graph_factor(10)[1] > 1e10
