import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colmerge import PowerSystem
from colmerge.screen import flow_range, screen_redundant
from colmerge.synthetic import random_system

from conftest import make_screen_system


def tiny_system(seed, L=3, M=3, I=2, T=2):
    rng = np.random.default_rng(seed)
    lower = rng.uniform(-2, 3, size=(M, T))
    cap_lo = rng.uniform(0, 2, size=(I, T))
    return PowerSystem(
        ptdf_units=rng.uniform(-1, 1, size=(L, I)),
        ptdf_loads=rng.uniform(-1, 1, size=(L, M)),
        line_limits=rng.uniform(0.5, 6, size=L),
        load_lower=lower,
        load_upper=lower + rng.uniform(0, 4, size=(M, T)),
        unit_cap_lower=cap_lo,
        unit_cap_upper=cap_lo + rng.uniform(0, 4, size=(I, T)),
    )


def corner_flows(sys, t):
    """Line flows at every unit corner {0, lo, hi} times every load corner."""
    I, M = sys.num_units, sys.num_loads
    unit_pts = [(0.0, sys.unit_cap_lower[i, t], sys.unit_cap_upper[i, t]) for i in range(I)]
    load_pts = [(sys.load_lower[m, t], sys.load_upper[m, t]) for m in range(M)]
    P = np.array(list(itertools.product(*unit_pts)))
    D = np.array(list(itertools.product(*load_pts)))
    fu = P @ sys.ptdf_units.T  # (nP, L)
    fd = D @ sys.ptdf_loads.T  # (nD, L)
    return (fu[:, None, :] - fd[None, :, :]).reshape(-1, sys.num_lines)


def test_example_upper_redundant_only():
    res = screen_redundant(make_screen_system(1.2))
    assert res.redundant == frozenset({(0, "upper", 0)})
    assert res.fully_inactive_lines == frozenset()
    sup, inf = flow_range(make_screen_system(1.2))
    assert sup[0, 0] == pytest.approx(1.0)
    assert inf[0, 0] == pytest.approx(-1.3)


def test_example_tight_limit_keeps_both():
    res = screen_redundant(make_screen_system(0.9))
    assert res.redundant == frozenset()
    assert res.active_lines == [0]


def test_loose_limit_makes_line_inactive():
    res = screen_redundant(make_screen_system(2.0))
    assert res.fully_inactive_lines == frozenset({0})
    assert res.active_lines == []
    assert res.total_constraints == 2


def test_no_caps_disables_screen(worked):
    res = screen_redundant(worked)
    assert res.redundant == frozenset() and res.notice
    assert res.active_lines == [0, 1]


def test_screen_safety_by_enumeration():
    screened = 0
    for seed in range(50):
        sys = tiny_system(seed)
        res = screen_redundant(sys)
        screened += len(res.redundant)
        for t in range(sys.num_periods):
            flows = corner_flows(sys, t)
            for l in range(sys.num_lines):
                if (l, "upper", t) in res.redundant:
                    assert flows[:, l].max() <= sys.line_limits[l] + 1e-12
                if (l, "lower", t) in res.redundant:
                    assert flows[:, l].min() >= -sys.line_limits[l] - 1e-12
    assert screened > 0


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.floats(1.0, 4.0))
def test_loosening_limits_only_adds_redundancy(seed, factor):
    sys = tiny_system(seed)
    looser = PowerSystem(sys.ptdf_units, sys.ptdf_loads, sys.line_limits * factor,
                         sys.load_lower, sys.load_upper, sys.unit_cap_lower, sys.unit_cap_upper)
    assert screen_redundant(sys).redundant <= screen_redundant(looser).redundant


def test_random_system_has_sane_counts():
    sys = random_system(0, num_lines=8, num_loads=5)
    res = screen_redundant(sys)
    assert len(res.redundant) <= res.total_constraints
    assert set(res.active_lines) | res.fully_inactive_lines == set(range(8))
