import math

import numpy as np
import pytest

from critlab import randsrc as rs
from critlab.errors import ParameterError

N = 10**6


def test_stream_matches_numpy_philox():
    ours = rs.Stream(5, 7).raw(10)
    ref = np.random.Philox(key=np.array([5, 7], dtype=np.uint64)).random_raw(10)
    assert np.array_equal(ours, ref)


def test_stream_is_pure_function_of_seed():
    a = rs.Stream(123, 4).raw(50)
    b = rs.Stream(123, 4).raw(50)
    c = rs.Stream(123, 5).raw(50)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_distinct_streams_look_independent():
    x = rs.bernoulli(0.5, rs.Stream(9, 0), N).astype(float)
    y = rs.bernoulli(0.5, rs.Stream(9, 1), N).astype(float)
    corr = np.corrcoef(x, y)[0, 1]
    assert abs(corr) < 4 / math.sqrt(N)


def test_seed_validation():
    with pytest.raises(ParameterError):
        rs.SeedSpec(-1)
    with pytest.raises(ParameterError):
        rs.Stream(1 << 64)


def test_bernoulli_degenerate_and_mean():
    assert rs.bernoulli(0.0, rs.Stream(1), 1000).sum() == 0
    assert rs.bernoulli(1.0, rs.Stream(1), 1000).sum() == 1000
    m = rs.bernoulli(0.5, rs.Stream(2), N).mean()
    assert abs(m - 0.5) <= 3 * math.sqrt(0.25 / N)


def test_binomial_degenerate_and_moments():
    assert rs.binomial(17, 0.0, rs.Stream(1)) == 0
    assert rs.binomial(17, 1.0, rs.Stream(1)) == 17
    x = rs.binomial(99, 0.01, rs.Stream(3), N).astype(float)
    mean, m2 = 0.99, 99 * 0.01 * 0.99 + 0.99**2
    assert abs(m2 - 1.9602) < 1e-12
    var = 99 * 0.01 * 0.99
    assert abs(x.mean() - mean) <= 3 * math.sqrt(var / N)
    m4 = np.mean(x**4)
    assert abs(np.mean(x**2) - m2) <= 3 * math.sqrt((m4 - m2**2) / N)


@pytest.mark.parametrize("N_, q", [(1000, 0.3), (10**6, 1e-4), (50, 0.9), (10**7, 0.5)])
def test_binomial_mean_both_branches(N_, q):
    x = rs.binomial(N_, q, rs.Stream(11), 200_000).astype(float)
    var = N_ * q * (1 - q)
    assert abs(x.mean() - N_ * q) <= 4 * math.sqrt(var / len(x))
    assert x.min() >= 0 and x.max() <= N_


def test_poisson():
    assert rs.poisson(0.0, rs.Stream(1)) == 0
    x = rs.poisson(1.0, rs.Stream(4), N)
    p0 = math.exp(-1)
    assert abs(np.mean(x == 0) - p0) <= 3 * math.sqrt(p0 * (1 - p0) / N)
    # variance of the sample variance for Poisson(1): (mu4 - sigma^4)/N with mu4 = 1 + 3
    assert abs(x.var() - 1.0) <= 3 * math.sqrt(3.0 / N)


def test_poisson_large_mean():
    x = rs.poisson(250.0, rs.Stream(6), 200_000).astype(float)
    assert abs(x.mean() - 250) <= 4 * math.sqrt(250 / len(x))


def test_exponential():
    x = rs.exponential(1.0, rs.Stream(5), N)
    assert abs(x.mean() - 1) <= 3 / math.sqrt(N)
    s = math.exp(-1)
    assert abs(np.mean(x > 1) - s) <= 3 * math.sqrt(s * (1 - s) / N)
    y = rs.exponential(2.0, rs.Stream(6), N)
    assert abs(y.mean() - 0.5) <= 3 * 0.5 / math.sqrt(N)


def test_cut_gamma_large_theta():
    x = rs.cut_gamma(rs.CutGammaParams(50.0), rs.Stream(7), N)
    assert abs(rs.cut_gamma_mean(50.0) - 2.0) < 1e-15
    assert abs(x.mean() - rs.cut_gamma_mean(50.0)) <= 3 * math.sqrt(2.0 / N)


def test_cut_gamma_small_theta_and_atom():
    assert abs(rs.cut_gamma_mean(0.01) - 0.01) < 1e-4
    x = rs.cut_gamma(1.0, rs.Stream(8), N)
    atom = rs.cut_gamma_atom(1.0)
    assert abs(atom - 2 * math.exp(-1)) < 1e-15
    assert abs(np.mean(x == 1.0) - atom) <= 3 * math.sqrt(atom * (1 - atom) / N)
    assert x.max() <= 1.0


def test_cut_gamma_second_moment_by_quadrature():
    from scipy import integrate
    for theta in (0.5, 1.0, 2.0, 5.0):
        body, _ = integrate.quad(lambda u: u * u * u * math.exp(-u), 0, theta)
        assert abs(body + theta**2 * rs.cut_gamma_atom(theta)
                   - rs.cut_gamma_second_moment(theta)) < 1e-10


def test_invalid_parameters():
    with pytest.raises(ParameterError):
        rs.bernoulli(1.5, rs.Stream(1))
    with pytest.raises(ParameterError):
        rs.binomial(-1, 0.5, rs.Stream(1))
    with pytest.raises(ParameterError):
        rs.poisson(-0.1, rs.Stream(1))
    with pytest.raises(ParameterError):
        rs.exponential(0.0, rs.Stream(1))
    with pytest.raises(ParameterError):
        rs.CutGammaParams(0.0)
