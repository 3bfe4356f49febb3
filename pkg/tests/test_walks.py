from fractions import Fraction as F
from itertools import product

import pytest

from critlab import walks
from critlab.errors import ParameterError

BIN2 = walks.binomial_law(2, F(1, 2))
FAIR = walks.IncrementLaw.from_pairs([(0, F(1, 2)), (2, F(1, 2))])


def brute_survival(law, r, k):
    total = F(0)
    for path in product(list(zip(law.values, law.probs)), repeat=k):
        s, w = r, F(1)
        for v, p in path:
            s += v - 1
            w *= p
            if s <= 0:
                break
        else:
            total += w
    return total


def test_dp_closed_values():
    assert walks.positivity_prob_dp(BIN2, 1, 1, exact=True) == F(3, 4)
    assert walks.positivity_prob_dp(BIN2, 1, 2, exact=True) == F(5, 8)
    assert walks.positivity_prob_dp(BIN2, 1, 2) == pytest.approx(0.625, abs=1e-15)


@pytest.mark.parametrize("r,k", [(1, 5), (2, 6), (3, 4)])
def test_dp_matches_path_enumeration(r, k):
    assert walks.positivity_prob_dp(BIN2, r, k, exact=True) == brute_survival(BIN2, r, k)
    assert walks.positivity_prob_dp(FAIR, r, k, exact=True) == brute_survival(FAIR, r, k)


def test_dp_float_agrees_with_exact_long_horizon():
    exact = walks.positivity_prob_dp(BIN2, 1, 300, exact=True)
    assert walks.positivity_prob_dp(BIN2, 1, 300) == pytest.approx(float(exact), rel=1e-12)


def test_dp_conventions():
    with pytest.raises(ParameterError):
        walks.positivity_prob_dp(BIN2, 1, 0)
    with pytest.raises(ParameterError):
        walks.positivity_prob_dp(BIN2, 0, 3)
    assert walks.positivity_prob_dp(BIN2, 10**6, 1) == 1.0
    with pytest.raises(ParameterError):
        walks.positivity_prob_dp(BIN2, 1, 10, cap=2)


def test_simulate_survival():
    est = walks.simulate_survival(BIN2, 1, 2, 10**6, 3)
    assert est.ci_lo <= 0.625 <= est.ci_hi
    ones = walks.IncrementLaw.from_pairs([(1, 1.0)])
    assert walks.simulate_survival(ones, 1, 50, 1000, 1).p_hat == 1.0
    zeros = walks.IncrementLaw.from_pairs([(0, 1.0)])
    assert walks.simulate_survival(zeros, 1, 3, 1000, 1).p_hat == 0.0


def test_favourable_count():
    assert walks.favourable_count([1, 1, 1], 0) == 3
    assert walks.favourable_count([1, -1, 1], 0) <= 1
    # S_n <= 0: the bound says nothing but the raw count is still returned
    assert walks.favourable_count([-1, -1, 1], 0) == 0
    assert walks.favourable_count([2, -1, -1], 0) == 0


def test_ballot_fair_walk_small():
    rep = walks.ballot_check(FAIR, 1, 0, 4)
    assert rep.passed
    assert rep.max_ratio <= 1


def test_ballot_barrier_out_of_reach():
    rep = walks.ballot_check(BIN2, 1, 5, 6)
    assert rep.rows == [] and rep.passed


def test_ballot_start_at_barrier_breaks_estimate():
    # with r = a = 1 the walk must climb on its first step, so the rotation
    # argument has no slack; the LHS exceeds the RHS for the larger j
    rep = walks.ballot_check(BIN2, 1, 1, 6)
    assert not rep.passed
    assert {j for j, _, _ in rep.violations} == {4, 5, 6, 7}


def test_ballot_dp_matches_enumeration():
    a = walks.ballot_check(BIN2, 1, 0, 7, mode="enumerate")
    b = walks.ballot_check(BIN2, 1, 0, 7, mode="dp")
    assert a.rows == b.rows


def test_ballot_requires_positive_point_mass():
    with pytest.raises(ParameterError):
        walks.ballot_check(BIN2, 2, 0, 4)


def test_survival_bound_values():
    assert walks.survival_bound(BIN2, 1, 100) == pytest.approx(0.8)
    assert walks.survival_bound(BIN2, 1, 1) == pytest.approx(8.0)
    law = walks.poisson_law(1.0)
    assert walks.survival_bound(law, 1, 10**12) < 1e-4


def test_survival_bound_rejects_supercritical():
    with pytest.raises(ParameterError):
        walks.survival_bound(walks.binomial_law(3, 0.5), 1, 10)


def test_domination_on_critical_laws():
    assert walks.domination_violations(BIN2, 1, 2000) == []
    assert walks.domination_violations(walks.poisson_law(1.0), 1, 2000) == []


def test_laws_normalised():
    for law in (walks.binomial_law(1000, 0.001), walks.poisson_law(3.0),
                walks.mixed_binomial_law(200, 200, 1 / 200),
                walks.mixed_poisson_cut_gamma_law(1.1462, 1.0)):
        assert abs(sum(law.probs) - 1) < 1e-12
        assert law.truncation_mass < 1e-12


def test_mixed_poisson_mean_is_cut_gamma_mean():
    from critlab.randsrc import cut_gamma_mean
    for theta, lam in ((0.5, 1.0), (2.0, 0.5), (1.1462, 1.0)):
        law = walks.mixed_poisson_cut_gamma_law(theta, lam)
        assert float(law.mean) == pytest.approx(cut_gamma_mean(theta) / lam, rel=1e-9)


def test_mixed_binomial_mean():
    n, m, p = 300, 200, 0.004
    law = walks.mixed_binomial_law(n, m, p)
    assert float(law.mean) == pytest.approx(n * p * m * p, rel=1e-9)


def test_law_validation():
    with pytest.raises(ParameterError):
        walks.IncrementLaw((0, 1), (0.5, 0.6))
    with pytest.raises(ParameterError):
        walks.IncrementLaw((-1, 1), (0.5, 0.5))
