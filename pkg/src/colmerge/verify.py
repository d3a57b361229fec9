"""Audits of a merged system against the original one.

``run_theorem1_audit`` samples load scenarios in the box and dispatches on
the power-balance manifold, and checks that every dispatch accepted by the
merged constraints is also accepted by the original ones.
``bound_attainment_sweep`` checks each stored error bound against an exact
vertex enumeration of the group's residual.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .greedy import ApproxParams, delta_from_totals
from .system import Partition, PowerSystem
from .transform import MergedSystem, default_tol, merged_flows, original_flows
from .uniform import MAX_ENUM_SIZE, box_vertices

ATTAIN_RTOL = 1e-9


@dataclass
class AuditReport:
    samples_drawn: int
    merged_feasible_hits: int
    theorem1_counterexamples: int
    worst_bound_slack: float
    max_delta: float
    avg_delta: float
    vertex_bits_original: int
    vertex_bits_merged: int
    seed: int
    bounds_ok: bool = True
    worst_violation: float = 0.0

    @property
    def vacuous(self) -> bool:
        return self.merged_feasible_hits == 0

    @property
    def passed(self) -> bool:
        return self.theorem1_counterexamples == 0 and not self.vacuous and self.bounds_ok

    def to_dict(self) -> dict:
        out = asdict(self)
        out["vacuous"] = self.vacuous
        out["passed"] = self.passed
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [
            f"audit: {status} (seed {self.seed})",
            f"  samples drawn          {self.samples_drawn}",
            f"  merged-feasible hits   {self.merged_feasible_hits}",
            f"  counterexamples        {self.theorem1_counterexamples}",
            f"  worst bound slack      {self.worst_bound_slack:.3e} MW",
            f"  max delta / avg delta  {self.max_delta:.4%} / {self.avg_delta:.4%}",
            f"  vertex bits            {self.vertex_bits_original} -> {self.vertex_bits_merged}",
        ]
        if self.vacuous:
            lines.append("  no sample satisfied the merged constraints (vacuous audit)")
        if not self.bounds_ok:
            lines.append("  an error bound is not attained by its group residual")
        return "\n".join(lines)


def delta_metrics(ms: MergedSystem, sys: PowerSystem, active_lines=None):
    """Max and average accumulated error relative to the line limits."""
    lines = ms.active_lines if active_lines is None else np.asarray(list(active_lines), int)
    if lines.size == 0:
        raise ValueError("no active lines to measure")
    return delta_from_totals(ms.error_sums[lines], sys.line_limits[lines])


def vertex_bits(sys: PowerSystem, ms: MergedSystem) -> tuple[int, int]:
    """log2 of the box vertex counts before and after merging."""
    return sys.num_loads * sys.num_periods, ms.num_groups * sys.num_periods


@dataclass
class SweepResult:
    worst_slack: float  # signed slack with the largest magnitude
    min_slack: float
    exact: bool  # False when some group was sampled instead of enumerated
    passed: bool
    checked: int


def _group_max_residual(sys, members, lines, alpha, beta, t, rng, mc_samples):
    n = len(members)
    lo = sys.load_lower[members, t]
    width = sys.load_upper[members, t] - lo
    coeffs = sys.ptdf_loads[np.ix_(lines, members)]  # (La, n)
    if n <= MAX_ENUM_SIZE:
        V = box_vertices(n)
        exact = True
    else:
        V = rng.integers(0, 2, size=(mc_samples, n)).astype(float)
        exact = False
    worst = np.zeros(len(lines))
    for start in range(0, V.shape[0], 1 << 15):
        D = lo + V[start:start + (1 << 15)] * width
        resid = D @ coeffs.T - np.outer(D.sum(axis=1), alpha) - beta
        worst = np.maximum(worst, np.abs(resid).max(axis=0))
    return worst, exact


def bound_attainment_sweep(sys: PowerSystem, part: Partition, params: ApproxParams,
                           lines=None, mc_samples: int = 4096, seed: int = 0) -> SweepResult:
    """Compare every stored error with the enumerated worst residual."""
    lines = np.arange(sys.num_lines) if lines is None else np.asarray(list(lines), int)
    rng = np.random.default_rng(seed)
    worst_slack, min_slack = 0.0, np.inf
    exact_all, ok, checked = True, True, 0
    if lines.size == 0:
        return SweepResult(0.0, 0.0, True, True, 0)
    for k, members in enumerate(part.groups):
        for t in range(sys.num_periods):
            a = params.alpha[lines, k, t]
            b = params.beta[lines, k, t]
            e = params.eps[lines, k, t]
            worst, exact = _group_max_residual(sys, list(members), lines, a, b, t, rng,
                                               mc_samples)
            slack = e - worst
            tol = ATTAIN_RTOL * (1.0 + np.abs(e))
            if exact:
                ok &= bool(np.all(np.abs(slack) <= tol))
            else:
                ok &= bool(np.all(slack >= -tol))
            exact_all &= exact
            i = int(np.argmax(np.abs(slack)))
            if abs(slack[i]) > abs(worst_slack):
                worst_slack = float(slack[i])
            min_slack = min(min_slack, float(slack.min()))
            checked += slack.size
    return SweepResult(worst_slack, min_slack, exact_all, ok, checked)


def _draw_scenarios(rng, sys, S):
    M, T = sys.num_loads, sys.num_periods
    at_vertex = rng.random((S, 1, 1)) < 0.5
    u = np.where(at_vertex, rng.integers(0, 2, size=(S, M, T)), rng.random((S, M, T)))
    return sys.load_lower + u * (sys.load_upper - sys.load_lower)


def _step_interval(f0, b, lo, hi):
    """Range of step sizes keeping ``lo <= f0 + step*b <= hi`` on all lines."""
    pos = b > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        upper = (np.where(pos, hi, lo) - f0) / b
        lower = (np.where(pos, lo, hi) - f0) / b
    zero = b == 0
    if zero.any():
        inside = (f0 <= hi) & (f0 >= lo)
        upper[zero] = np.where(inside, np.inf, -np.inf)[zero]
        lower[zero] = np.where(inside, -np.inf, np.inf)[zero]
    return lower.max(axis=1), upper.min(axis=1)


def _audit_chunk(rng, sys, ms, G, lines, S, tol, span):
    I, T = sys.num_units, sys.num_periods
    d = _draw_scenarios(rng, sys, S)
    dt = G @ d
    p0 = np.repeat(dt.sum(axis=1, keepdims=True) / I, I, axis=1)
    u = rng.standard_normal((S, I, T))
    u -= u.mean(axis=1, keepdims=True)

    hi = ms.tightened_upper[lines]
    lo = ms.tightened_lower[lines]
    f0 = merged_flows(p0, dt, ms)[:, lines]
    b = ms.ptdf_units[lines] @ u
    t_min, t_max = _step_interval(f0, b, lo, hi)
    nonempty = t_min <= t_max
    t_min = np.clip(t_min, -span, span)
    t_max = np.clip(t_max, -span, span)

    # boundary points are where an undersized error bound shows up first
    mode = rng.integers(0, 4, size=(S, T))
    step = np.select(
        [mode == 0, mode == 1, mode == 2],
        [t_max, t_min, t_min + rng.random((S, T)) * (t_max - t_min)],
        rng.standard_normal((S, T)) * span * 1e-3,
    )
    step = np.where(nonempty | (mode == 3), step, 0.0)
    p = p0 + step[:, None, :] * u

    scale = np.maximum(1.0, np.abs(dt).sum(axis=1))
    gap_m = np.abs(p.sum(axis=1) - dt.sum(axis=1)) <= tol * scale
    fm = merged_flows(p, dt, ms)[:, lines]
    merged_ok = gap_m.all(axis=1) & ((fm <= hi + tol) & (fm >= lo - tol)).all(axis=(1, 2))

    F = sys.line_limits[lines][:, None]
    gap_o = np.abs(p.sum(axis=1) - d.sum(axis=1)) <= tol * scale
    fo = original_flows(p, d, sys)[:, lines]
    excess = np.maximum(fo - F, -F - fo).max(axis=(1, 2))
    orig_ok = gap_o.all(axis=1) & (excess <= tol)
    bad = merged_ok & ~orig_ok
    worst = float(excess[bad].max()) if bad.any() else 0.0
    return int(merged_ok.sum()), int(bad.sum()), worst


def run_theorem1_audit(sys: PowerSystem, ms: MergedSystem, samples: int = 100_000,
                       seed: int = 0, tol: float | None = None, chunk: int = 10_000,
                       check_bounds: bool = True) -> AuditReport:
    """Sample (dispatch, scenario) pairs and count merged-accepted, original-rejected ones.

    Only the lines protected by the merged system are compared; screened-out
    lines are outside the guarantee.
    """
    rng = np.random.default_rng(seed)
    tol = default_tol(sys.line_limits) if tol is None else tol
    lines = ms.active_lines
    G = ms.partition.membership(sys.num_loads)
    span = 1e3 * float(sys.line_limits.max())
    hits = bad = 0
    worst = 0.0
    done = 0
    while done < samples:
        S = min(chunk, samples - done)
        h, c, w = _audit_chunk(rng, sys, ms, G, lines, S, tol, span)
        hits, bad, worst = hits + h, bad + c, max(worst, w)
        done += S

    if check_bounds and ms.params is not None:
        sweep = bound_attainment_sweep(sys, ms.partition, ms.params, lines, seed=seed)
        slack, bounds_ok = sweep.worst_slack, sweep.passed
    else:
        slack, bounds_ok = float("nan"), True
    if lines.size:
        max_d, avg_d = delta_metrics(ms, sys, lines)
    else:
        max_d = avg_d = 0.0
    bits_o, bits_m = vertex_bits(sys, ms)
    return AuditReport(
        samples_drawn=done,
        merged_feasible_hits=hits,
        theorem1_counterexamples=bad,
        worst_bound_slack=slack,
        max_delta=max_d,
        avg_delta=avg_d,
        vertex_bits_original=bits_o,
        vertex_bits_merged=bits_m,
        seed=seed,
        bounds_ok=bounds_ok,
        worst_violation=worst,
    )
