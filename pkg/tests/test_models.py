import math

import numpy as np
import pytest

from critlab.errors import ParameterError
from critlab.explore import ExcursionState, max_component, run_exploration
from critlab.models import (ErParams, IntersectionParams, QuantumParams, RegParams, cmax_batch,
                            cmax_sample, make_params)
from critlab.models.er import er_component_sizes, er_materialize, er_step, er_trace
from critlab.models.graph import components_unionfind, degrees, read_edge_list, write_edge_list
from critlab.models.intersection import (IntersectionStepper, intersection_explore,
                                         intersection_materialize, intersection_step,
                                         intersection_trace)
from critlab.models.quantum import (QuantumStepper, quantum_direct, quantum_reduced_explore,
                                    quantum_reduced_step, quantum_reduced_trace)
from critlab.models.regular import (circulant, config_checks, config_pairing,
                                    config_percolation_explore, config_sample_simple,
                                    regular_component_sizes, regular_percolate_explicit)
from critlab.oracles import empirical_pmf, er_exact, tv_distance
from critlab.randsrc import Stream, cut_gamma_mean


# ------------------------------------------------------------ parameters

def test_params_defaults():
    assert ErParams(100).p == 0.01
    assert RegParams(10, 3).p == 0.5
    rig = IntersectionParams(100, beta=0.5)
    assert rig.m == 50 and rig.p == pytest.approx(1 / math.sqrt(5000))
    assert QuantumParams(10).beta == pytest.approx(1.1461932, abs=1e-6)


def test_params_validation():
    with pytest.raises(ParameterError):
        RegParams(5, 3)
    with pytest.raises(ParameterError):
        RegParams(10, 2)
    with pytest.raises(ParameterError):
        ErParams(10, p=1.5)
    with pytest.raises(ParameterError):
        make_params("er", n=10, d=3)
    with pytest.raises(ParameterError):
        make_params("nope", n=10)


# ------------------------------------------------------------ ER

def test_er_step_first_law():
    params = ErParams(3, p=1 / 3)
    stream = Stream(1, 0)
    zeros = 0
    reps = 200_000
    for _ in range(reps):
        st = ExcursionState(0, 1, 2)
        zeros += er_step(st, params, stream) == 0
    assert abs(zeros / reps - 4 / 9) <= 3 * math.sqrt(4 / 9 * 5 / 9 / reps)


def test_er_step_degenerate():
    st = ExcursionState(5, 1, 0)
    assert er_step(st, ErParams(10, p=0.9), Stream(1)) == 0
    tr = er_trace(ErParams(50, p=0.0), Stream(2))
    assert tr.component_sizes.tolist() == [1] * 50


def test_er_materialize():
    assert len(er_materialize(ErParams(30, p=1.0), Stream(1))) == 435
    assert len(er_materialize(ErParams(30, p=0.0), Stream(1))) == 0
    counts = np.array([len(er_materialize(ErParams(1000), Stream(3, i))) for i in range(10_000)])
    mean = 1000 * 999 / 2 / 1000
    sd = math.sqrt(mean * (1 - 1e-3))
    assert abs(counts.mean() - mean) <= 3 * sd / 100


def test_components_unionfind_examples():
    assert components_unionfind(4, []).tolist() == [1, 1, 1, 1]
    assert components_unionfind(3, [(0, 1), (1, 2)]).tolist() == [3]
    assert components_unionfind(5, [(0, 1), (2, 3)]).tolist() == [2, 2, 1]


def test_edge_list_roundtrip(tmp_path):
    edges = er_materialize(ErParams(40, p=0.1), Stream(5))
    write_edge_list(tmp_path / "g.txt", 40, edges)
    n, back = read_edge_list(tmp_path / "g.txt")
    assert n == 40 and np.array_equal(back, edges)


def test_er_exploration_and_materialization_agree_in_law():
    p = ErParams(400)
    a = [er_explore_cmax(p, i) for i in range(3000)]
    b = [int(er_component_sizes(p, Stream(8, i))[0]) for i in range(3000)]
    se = math.sqrt(np.var(a) / 3000 + np.var(b) / 3000)
    assert abs(np.mean(a) - np.mean(b)) <= 4 * se


def er_explore_cmax(params, i):
    return cmax_sample(params, Stream(7, i))


def test_er_small_pmf():
    c, _ = cmax_batch(ErParams(4, p=0.25), 3, 0, 200_000)
    assert tv_distance(er_exact(4, 0.25), empirical_pmf(c)) < 0.01


# ------------------------------------------------------------ regular

def test_config_two_vertices():
    c, _ = cmax_batch(RegParams(2, 3), 11, 0, 200_000)
    p_hat = np.mean(c == 2)
    assert abs(p_hat - 0.65) <= 3 * math.sqrt(0.65 * 0.35 / 200_000)


def test_config_trace_properties():
    params = RegParams(500, 3)
    tr = config_percolation_explore(params, Stream(4))
    assert tr.total_steps == 500 * 3 // 2
    assert int(tr.vertex_counts.sum() + tr.extra_components.sum()) == 500
    assert max_component(tr) == tr.info["cmax"]
    assert tr.info["checks"]["length_plus1_breach"] == 0
    tr0 = config_percolation_explore(RegParams(200, 4, p=0.0), Stream(4))
    assert max_component(tr0) == 1


def test_config_exploration_matches_explicit_pairing():
    params = RegParams(1000, 3)
    a = np.array([cmax_sample(params, Stream(1, i)) for i in range(1500)])
    b = np.array([regular_component_sizes(params, Stream(2, i))[0] for i in range(1500)])
    se = math.sqrt(a.var() / 1500 + b.var() / 1500)
    assert abs(a.mean() - b.mean()) <= 4 * se


def test_config_coupling_counters():
    checks = config_checks(RegParams(2000, 3), Stream(6), 200)
    for key in ("eta1_breach", "eta2_breach", "fresh_breach", "active_breach",
                "length_plus1_breach"):
        assert checks[key] == 0
    assert checks["excursions"] > 0


def test_config_pairing_degrees():
    edges = config_pairing(50, 3, Stream(1))
    assert degrees(50, edges).tolist() == [3] * 50


def test_simple_sampler():
    for i in range(20):
        s = config_sample_simple(4, 3, Stream(3, i))
        assert s.success
        assert sorted(map(tuple, np.sort(s.edges, axis=1).tolist())) == \
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    tries = [config_sample_simple(50, 3, Stream(4, i)).attempts for i in range(400)]
    rate = 400 / sum(tries)
    assert 0.08 < rate < 0.2  # e^{-2} ~ 0.135 asymptotically
    with pytest.raises(ParameterError):
        config_sample_simple(5, 3, Stream(1))


def test_circulant():
    g = circulant(6, 3)
    assert len(g) == 9 and degrees(6, g).tolist() == [3] * 6
    c5 = circulant(5, 2)
    assert degrees(5, c5).tolist() == [2] * 5
    assert components_unionfind(5, c5).tolist() == [5]
    g8 = circulant(8, 3)
    assert degrees(8, g8).tolist() == [3] * 8
    assert components_unionfind(8, g8).tolist() == [8]


def test_percolate_explicit_extremes():
    g = circulant(30, 4)
    assert regular_percolate_explicit(30, g, 1.0, Stream(1)).tolist() == [30]
    assert regular_percolate_explicit(30, g, 0.0, Stream(1)).tolist() == [1] * 30
    assert cmax_sample(RegParams(30, 4, p=1.0, base="circulant"), Stream(1)) == 30


# ------------------------------------------------------------ intersection

def test_intersection_step_degenerate():
    params = IntersectionParams(10, m=5, p=0.3)
    st = ExcursionState(0, 1, 9, aux=5)
    assert intersection_step(st, params, Stream(1)) == (0, 0)
    full = IntersectionParams(10, m=5, p=1.0)
    st = ExcursionState(0, 1, 9, aux=0)
    assert intersection_step(st, full, Stream(1)) == (5, 9)


def test_intersection_first_step_mean():
    params = IntersectionParams(100, m=100, p=0.01)
    stream = Stream(2)
    reps = 200_000
    vals = np.empty(reps)
    for i in range(reps):
        st = ExcursionState(0, 1, 99, aux=0)
        vals[i] = intersection_step(st, params, stream)[1]
    target = 99 * (1 - (1 - 0.01**2) ** 100)
    assert abs(target - 0.985) < 1e-3
    assert abs(vals.mean() - target) <= 4 * vals.std() / math.sqrt(reps)


def test_intersection_materialize_extremes():
    assert intersection_materialize(IntersectionParams(20, m=7, p=0.0), Stream(1)).tolist() == [1] * 20
    assert intersection_materialize(IntersectionParams(20, m=7, p=1.0), Stream(1)).tolist() == [20]
    assert cmax_sample(IntersectionParams(20, m=7, p=0.0), Stream(1)) == 1


def test_intersection_engine_matches_kernel():
    params = IntersectionParams(300)
    tr = run_exploration(IntersectionStepper(params), 300, Stream(5, 1))
    _, Rs, Ds = intersection_explore(params, Stream(5, 1), record=300)
    assert np.array_equal(tr.Rs, Rs)
    assert intersection_trace(params, Stream(5, 1)).info["D"][-1] == Ds[-1]


def test_intersection_exploration_vs_materialization():
    params = IntersectionParams(500)
    a = np.array([cmax_sample(params, Stream(1, i)) for i in range(3000)])
    b = np.array([intersection_materialize(params, Stream(2, i))[0] for i in range(3000)])
    se = math.sqrt(a.var() / 3000 + b.var() / 3000)
    assert abs(a.mean() - b.mean()) <= 4 * se


# ------------------------------------------------------------ quantum

def test_quantum_reduced_step():
    params = QuantumParams(10**6, beta=0.02, lam=100.0)
    st = ExcursionState(0, 1, 0)
    assert quantum_reduced_step(st, params, Stream(1))[1] == 0
    stream = Stream(3)
    U = 10**6 - 1
    reps = 100_000
    vals = np.empty(reps)
    for i in range(reps):
        st = ExcursionState(0, 1, U)
        vals[i] = quantum_reduced_step(st, params, stream)[1]
    target = U * cut_gamma_mean(params.theta) / (params.lam * params.n)
    assert abs(vals.mean() - target) <= 4 * math.sqrt(target / reps) + 1e-3 * target


def test_quantum_small_theta_is_subcritical():
    params = QuantumParams(2000, beta=1e-3)
    assert quantum_reduced_explore(params, Stream(1)) <= 3


def test_quantum_engine_matches_kernel():
    params = QuantumParams(300)
    tr = run_exploration(QuantumStepper(params), 300, Stream(6, 2))
    _, Rs = quantum_reduced_explore(params, Stream(6, 2), record=300)
    assert np.array_equal(tr.Rs, Rs)
    quantum_reduced_trace(params, Stream(6, 2))


def test_quantum_single_circle_interval_count():
    # one circle: no links, so every interval is its own component
    params = QuantumParams(1, beta=1.0)
    c, k = cmax_batch(params, 4, 0, 200_000)
    assert np.all(c == 1)
    target = 1 + math.exp(-1)
    second = 2 + math.exp(-1)
    sd = math.sqrt(second - target**2)
    assert abs(k.mean() - target) <= 3 * sd / math.sqrt(200_000)


def test_quantum_direct_sizes_sum():
    params = QuantumParams(300)
    sizes = quantum_direct(params, Stream(1))
    assert np.all(np.diff(sizes) <= 0)
    assert quantum_direct(params, Stream(1), holes_enabled=False).sum() == 300


def test_quantum_no_holes_is_er():
    params = QuantumParams(4)
    p = -math.expm1(-params.theta / (params.lam * params.n))
    c, _ = cmax_batch(params, 9, 0, 200_000, holes=False)
    assert tv_distance(er_exact(4, p), empirical_pmf(c)) < 0.01


def test_batches_are_split_invariant():
    for params in (ErParams(500), RegParams(200, 3), IntersectionParams(300), QuantumParams(200)):
        whole, _ = cmax_batch(params, 17, 0, 40)
        left, _ = cmax_batch(params, 17, 0, 15)
        right, _ = cmax_batch(params, 17, 15, 25)
        assert np.array_equal(whole, np.concatenate((left, right)))
