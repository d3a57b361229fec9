import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colmerge import Partition, PowerSystem, aggregate_scenario
from colmerge.greedy import MergeConfig, compute_params, greedy_merge
from colmerge.synthetic import random_system
from colmerge.transform import (
    build_merged_system,
    check_merged_feasible,
    check_original_feasible,
    merged_flows,
    original_flows,
)
from colmerge.uniform import box_vertices
from colmerge.verify import vertex_bits


@pytest.fixture
def worked_ms(worked):
    part = Partition(((0, 2), (1,)))
    return build_merged_system(worked, part, compute_params(worked, part))


def test_worked_merged_values(worked_ms):
    ms = worked_ms
    np.testing.assert_array_equal(ms.tightened_upper[:, 0], [9.5, 9.5])
    np.testing.assert_array_equal(ms.tightened_lower[:, 0], [-9.5, -9.5])
    np.testing.assert_array_equal(ms.offsets[:, 0], [0.5, 0.5])
    np.testing.assert_array_equal(ms.merged_ptdf[:, :, 0], [[0.0, 3.0], [0.0, 1.0]])
    np.testing.assert_array_equal(ms.merged_upper[:, 0], [2.0, 1.0])
    assert ms.infeasible_lines == frozenset()


def test_identity_partition_reproduces_original(worked):
    part = Partition.identity(3)
    ms = build_merged_system(worked, part, compute_params(worked, part))
    np.testing.assert_array_equal(ms.merged_ptdf[:, :, 0], worked.ptdf_loads)
    assert not ms.offsets.any() and not ms.error_sums.any()
    np.testing.assert_array_equal(ms.tightened_upper[:, 0], worked.line_limits)


def test_accumulated_error_at_limit_is_infeasible(worked):
    sys = PowerSystem(worked.ptdf_units, worked.ptdf_loads, np.array([1.0, 10.0]),
                      worked.load_lower, worked.load_upper)
    part = Partition(((0, 1, 2),))
    ms = build_merged_system(sys, part, compute_params(sys, part))
    assert (0, 0) in ms.infeasible_lines
    assert (1, 0) not in ms.infeasible_lines
    assert ms.tightened_upper[0, 0] <= ms.tightened_lower[0, 0]


def test_params_for_other_partition_rejected(worked):
    part = Partition(((0, 2), (1,)))
    params = compute_params(worked, Partition.identity(3))
    with pytest.raises(ValueError):
        build_merged_system(worked, part, params)


def test_zero_dispatch_is_feasible(worked, worked_ms):
    assert check_merged_feasible(np.zeros((2, 1)), np.zeros((2, 1)), worked_ms)
    assert check_original_feasible(np.zeros((2, 1)), np.zeros((3, 1)), worked)


def test_merged_violation_slack(worked_ms):
    p = np.array([[10.1], [-10.1]])
    rep = check_merged_feasible(p, np.zeros((2, 1)), worked_ms)
    assert not rep.feasible
    (v,) = [v for v in rep.violations if v.kind == "upper"]
    assert (v.line, v.period) == (0, 0)
    assert v.slack == pytest.approx(-0.1)


def test_converse_fails(worked, worked_ms):
    # rejected by the merged model, accepted by the original one
    d = np.array([[1.0], [0.0], [0.0]])
    p = np.array([[10.4], [-9.4]])
    dt = aggregate_scenario(d, worked_ms.partition)
    assert not check_merged_feasible(p, dt, worked_ms)
    assert check_original_feasible(p, d, worked)


def test_balance_violation_reported(worked_ms):
    rep = check_merged_feasible(np.array([[1.0], [0.0]]), np.zeros((2, 1)), worked_ms)
    assert [v.kind for v in rep.violations] == ["balance"]


def test_out_of_box_is_flagged_not_rejected(worked, worked_ms):
    d = np.array([[2.0], [0.0], [0.0]])
    rep = check_original_feasible(np.array([[2.0], [0.0]]), d, worked)
    assert rep.feasible and rep.outside_box
    dt = np.array([[5.0], [0.0]])
    rep = check_merged_feasible(np.array([[5.0], [0.0]]), dt, worked_ms)
    assert rep.outside_box


def test_shape_mismatch_raises(worked_ms):
    with pytest.raises(ValueError):
        check_merged_feasible(np.zeros((2, 1)), np.zeros((3, 1)), worked_ms)


def test_vertex_ledger(worked, worked_ms):
    before, after = vertex_bits(worked, worked_ms)
    assert before - after == (3 - 2) * 1


def test_batched_flows_match_loop():
    sys = random_system(5, num_lines=4, num_loads=5, num_units=3, num_periods=3)
    part, params, _ = greedy_merge(sys, MergeConfig(k_req=2))
    ms = build_merged_system(sys, part, params)
    rng = np.random.default_rng(0)
    p = rng.normal(size=(6, 3, 3))
    dt = rng.normal(size=(6, 2, 3))
    batched = merged_flows(p, dt, ms)
    for s in range(6):
        manual = sys.ptdf_units @ p[s] - np.einsum("lkt,kt->lt", ms.merged_ptdf, dt[s]) - ms.offsets
        np.testing.assert_allclose(batched[s], manual, atol=1e-12)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.integers(2, 5), st.integers(1, 4), st.integers(1, 2))
def test_merged_feasible_implies_original(seed, M, L, T):
    """Dispatches right at the tightened limit stay inside every original limit."""
    sys = random_system(seed, num_lines=L, num_loads=M, num_units=2, num_periods=T)
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, M))
    part, params, _ = greedy_merge(sys, MergeConfig(k_req=k))
    ms = build_merged_system(sys, part, params)
    V = box_vertices(M)
    for v in V[rng.permutation(len(V))[:16]]:
        d = sys.load_lower + v[:, None] * sys.load_widths
        dt = aggregate_scenario(d, part)
        # push along the balance-preserving direction until a merged limit is tight
        u = np.array([[1.0], [-1.0]]) * np.ones((1, T))
        p0 = np.repeat(dt.sum(axis=0, keepdims=True) / 2, 2, axis=0)
        f0 = merged_flows(p0, dt, ms)
        b = sys.ptdf_units @ u
        with np.errstate(divide="ignore", invalid="ignore"):
            room = np.where(b > 0, (ms.tightened_upper - f0) / b,
                            np.where(b < 0, (ms.tightened_lower - f0) / b, np.inf))
        step = room.min(axis=0)
        if not np.all(np.isfinite(step)) or np.any(step < 0):
            continue
        p = p0 + step * u
        if not check_merged_feasible(p, dt, ms):
            continue
        assert check_original_feasible(p, d, sys), original_flows(p, d, sys)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(1, 4))
def test_per_group_bound_holds_on_vertices(seed, M, L):
    sys = random_system(seed, num_lines=L, num_loads=M, num_periods=1)
    rng = np.random.default_rng(seed)
    part, params, _ = greedy_merge(sys, MergeConfig(k_req=int(rng.integers(1, M + 1))))
    V = box_vertices(M)
    D = sys.load_lower[:, 0] + V * sys.load_widths[:, 0]
    for k, g in enumerate(part.groups):
        g = list(g)
        exact = D[:, g] @ sys.ptdf_loads[:, g].T
        approx = D[:, g].sum(axis=1)[:, None] * params.alpha[:, k, 0] + params.beta[:, k, 0]
        resid = np.abs(exact - approx).max(axis=0)
        np.testing.assert_allclose(resid, params.eps[:, k, 0], rtol=1e-9, atol=1e-9)
