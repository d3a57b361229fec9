import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from colmerge import Partition, PowerSystem, aggregate_scenario, validate_system
from colmerge.system import DispatchSchedule


def test_worked_system_is_valid(worked):
    assert validate_system(worked) == []
    assert (worked.num_units, worked.num_loads, worked.num_lines, worked.num_periods) == (2, 3, 2, 1)
    assert not worked.has_unit_caps


def test_arrays_are_read_only(worked):
    with pytest.raises(ValueError):
        worked.ptdf_loads[0, 0] = 5.0


def test_dimension_mismatch_reported():
    sys = PowerSystem(
        ptdf_units=np.zeros((2, 1)),
        ptdf_loads=np.zeros((3, 2)),  # 3 rows but 2 lines
        line_limits=np.ones(2),
        load_lower=np.zeros((2, 1)),
        load_upper=np.ones((2, 1)),
    )
    errors = validate_system(sys)
    assert any(e.startswith("dimension mismatch") for e in errors)


def test_inverted_bound_names_the_entry(worked):
    upper = np.array(worked.load_upper)
    upper[1, 0] = -1.0
    sys = PowerSystem(worked.ptdf_units, worked.ptdf_loads, worked.line_limits,
                      worked.load_lower, upper)
    assert "inverted bound at (1,0)" in validate_system(sys)


def test_non_finite_and_nonpositive_limits(worked):
    ptdf = np.array(worked.ptdf_loads)
    ptdf[0, 2] = np.nan
    sys = PowerSystem(worked.ptdf_units, ptdf, np.array([10.0, 0.0]),
                      worked.load_lower, worked.load_upper)
    errors = validate_system(sys)
    assert "non-finite value in ptdf_loads at (0, 2)" in errors
    assert any("strictly positive" in e for e in errors)


def test_from_bounds_broadcasts():
    sys = PowerSystem.from_bounds(np.zeros((1, 1)), np.ones((1, 2)), [5.0],
                                  [0.0, 1.0], [1.0, 2.0], num_periods=3)
    assert sys.load_lower.shape == (2, 3)
    assert validate_system(sys) == []


def test_dispatch_rejects_nan():
    with pytest.raises(ValueError):
        DispatchSchedule(np.array([[np.nan]]))


def test_partition_canonical_order():
    p = Partition(((2, 0), (1,)))
    assert p.groups == ((0, 2), (1,))
    assert str(p) == "{1,3},{2}"
    assert p.to_lists(one_based=True) == [[1, 3], [2]]
    assert Partition.from_lists([[3, 1], [2]], one_based=True) == p


def test_partition_merge_and_check():
    p = Partition.identity(4).merge(0, 3)
    assert p.groups == ((0, 3), (1,), (2,))
    p.check(4)
    with pytest.raises(ValueError):
        p.check(5)
    with pytest.raises(ValueError):
        Partition(((0, 1), (1, 2))).check(3)
    with pytest.raises(ValueError):
        p.merge(1, 1)


def test_membership_matrix():
    G = Partition(((0, 2), (1,))).membership(3)
    np.testing.assert_array_equal(G, [[1, 0, 1], [0, 1, 0]])


@given(st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_aggregation_preserves_totals(M, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, M, size=M)
    groups = [tuple(np.flatnonzero(labels == k)) for k in np.unique(labels)]
    part = Partition(tuple(groups))
    d = rng.uniform(-5, 5, size=(4, M, 3))
    dt = aggregate_scenario(d, part)
    assert dt.shape == (4, part.num_groups, 3)
    np.testing.assert_allclose(dt.sum(axis=-2), d.sum(axis=-2), atol=1e-12)
    np.testing.assert_allclose(dt, part.membership(M) @ d, atol=1e-12)
