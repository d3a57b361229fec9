import json

import numpy as np
import pytest

from colmerge import Partition, PowerSystem
from colmerge.greedy import ApproxParams, MergeConfig, compute_params, greedy_merge
from colmerge.synthetic import random_system
from colmerge.transform import build_merged_system
from colmerge.verify import (
    bound_attainment_sweep,
    delta_metrics,
    run_theorem1_audit,
)


def merged(sys, part, params=None, lines=None):
    params = compute_params(sys, part) if params is None else params
    return build_merged_system(sys, part, params, lines)


def halve_eps(sys, ms):
    p = ms.params
    return build_merged_system(sys, ms.partition,
                               ApproxParams(p.partition, p.alpha, p.beta, 0.5 * p.eps))


def test_identity_audit_passes(worked):
    ms = merged(worked, Partition.identity(3))
    rep = run_theorem1_audit(worked, ms, samples=20_000, seed=1)
    assert rep.passed
    assert rep.max_delta == rep.avg_delta == 0.0
    assert rep.vertex_bits_original == rep.vertex_bits_merged == 3


def test_worked_audit(worked):
    ms = merged(worked, Partition(((0, 2), (1,))))
    rep = run_theorem1_audit(worked, ms, samples=100_000, seed=0)
    assert rep.theorem1_counterexamples == 0
    assert rep.merged_feasible_hits > 0
    assert rep.bounds_ok and rep.passed
    assert rep.max_delta == pytest.approx(0.05)
    assert (rep.vertex_bits_original, rep.vertex_bits_merged) == (3, 2)


def test_halved_error_is_caught(worked):
    ms = merged(worked, Partition(((0, 2), (1,))))
    rep = run_theorem1_audit(worked, halve_eps(worked, ms), samples=20_000, seed=0)
    assert rep.theorem1_counterexamples > 0
    assert not rep.passed
    assert rep.worst_violation > 0


def test_audit_is_reproducible(worked):
    ms = merged(worked, Partition(((0, 2), (1,))))
    a = run_theorem1_audit(worked, ms, samples=5000, seed=3)
    b = run_theorem1_audit(worked, ms, samples=5000, seed=3)
    assert a.to_dict() == b.to_dict()
    assert json.loads(a.to_json())["passed"] is True


def test_audit_on_random_systems():
    for seed in range(3):
        sys = random_system(seed, num_lines=6, num_loads=5, num_periods=2)
        for k in (3, 1):
            part, params, _ = greedy_merge(sys, MergeConfig(k_req=k))
            ms = build_merged_system(sys, part, params)
            rep = run_theorem1_audit(sys, ms, samples=20_000, seed=seed)
            assert rep.passed, rep.summary()
            assert run_theorem1_audit(sys, halve_eps(sys, ms), samples=20_000,
                                      seed=seed).theorem1_counterexamples > 0


def test_sweep_catches_perturbed_slope(worked):
    part = Partition(((0, 2), (1,)))
    p = compute_params(worked, part)
    assert bound_attainment_sweep(worked, part, p).passed
    alpha = np.array(p.alpha)
    alpha[0, 0, 0] += 0.1
    bad = ApproxParams(part, alpha, p.beta, p.eps)
    res = bound_attainment_sweep(worked, part, bad)
    assert not res.passed and res.min_slack < 0


def test_sweep_monte_carlo_for_large_groups():
    sys = random_system(1, num_lines=2, num_loads=22, num_periods=1)
    part = Partition((tuple(range(22)),))
    res = bound_attainment_sweep(sys, part, compute_params(sys, part), mc_samples=512)
    assert not res.exact and res.passed


def test_delta_metrics(worked):
    ms = merged(worked, Partition(((0, 2), (1,))))
    assert delta_metrics(ms, worked) == pytest.approx((0.05, 0.05))
    assert delta_metrics(ms, worked, [1]) == pytest.approx((0.05, 0.05))
    with pytest.raises(ValueError):
        delta_metrics(ms, worked, [])


def test_vacuous_audit_fails(worked):
    # limits so tight that every merged check rejects
    tight = PowerSystem(worked.ptdf_units, worked.ptdf_loads, np.array([0.5, 0.5]),
                        worked.load_lower, worked.load_upper)
    ms = merged(tight, Partition(((0, 1, 2),)))
    rep = run_theorem1_audit(tight, ms, samples=2000, seed=0)
    assert rep.vacuous and not rep.passed
    assert "vacuous" in rep.summary()
