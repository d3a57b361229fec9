"""Merged system construction and feasibility checks on both formulations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .greedy import ApproxParams
from .system import Partition, PowerSystem


@dataclass(frozen=True, eq=False)
class MergedSystem:
    partition: Partition
    merged_ptdf: np.ndarray  # L x K x T slopes
    offsets: np.ndarray  # L x T, sum of group offsets
    tightened_upper: np.ndarray  # L x T
    tightened_lower: np.ndarray  # L x T
    merged_lower: np.ndarray  # K x T
    merged_upper: np.ndarray  # K x T
    error_sums: np.ndarray  # L x T, zero on unprotected lines
    infeasible_lines: frozenset  # {(line, period)}
    active: np.ndarray  # bool L; False marks screened-out pass-through lines
    ptdf_units: np.ndarray
    line_limits: np.ndarray
    params: ApproxParams | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def num_groups(self) -> int:
        return self.partition.num_groups

    @property
    def num_lines(self) -> int:
        return self.line_limits.shape[0]

    @property
    def num_periods(self) -> int:
        return self.offsets.shape[1]

    @property
    def active_lines(self) -> np.ndarray:
        return np.flatnonzero(self.active)


def build_merged_system(sys: PowerSystem, part: Partition, params: ApproxParams,
                        active_lines=None) -> MergedSystem:
    """Aggregate bounds, merged columns, offsets and tightened limits.

    Only active lines are tightened; the remaining lines keep their limits and
    carry the computed slopes and offsets unchanged.
    """
    part.check(sys.num_loads)
    L, K, T = sys.num_lines, part.num_groups, sys.num_periods
    for name in ("alpha", "beta", "eps"):
        arr = getattr(params, name)
        if arr.shape != (L, K, T):
            raise ValueError(f"params.{name} has shape {arr.shape}, expected {(L, K, T)}")
    if params.partition != part:
        raise ValueError("params were computed for a different partition")

    active = np.zeros(L, dtype=bool)
    if active_lines is None:
        active[:] = True
    else:
        active[np.asarray(list(active_lines), dtype=int)] = True
    for name in ("alpha", "beta", "eps"):
        if not np.all(np.isfinite(getattr(params, name)[active])):
            raise ValueError(f"params.{name} missing (non-finite) for an active line")

    G = part.membership(sys.num_loads)
    sums = np.where(active[:, None], params.eps.sum(axis=1), 0.0)
    F = sys.line_limits[:, None]
    upper = F - sums
    lower = -F + sums
    infeasible = frozenset(
        (int(l), int(t)) for l, t in np.argwhere(active[:, None] & (sums >= F))
    )
    arrays = dict(
        merged_ptdf=np.array(params.alpha),
        offsets=params.beta.sum(axis=1),
        tightened_upper=upper,
        tightened_lower=lower,
        merged_lower=G @ sys.load_lower,
        merged_upper=G @ sys.load_upper,
        error_sums=sums,
    )
    for a in arrays.values():
        a.setflags(write=False)
    return MergedSystem(
        partition=part,
        infeasible_lines=infeasible,
        active=active,
        ptdf_units=sys.ptdf_units,
        line_limits=sys.line_limits,
        params=params,
        metadata={"pass_through_lines": [int(l) for l in np.flatnonzero(~active)]},
        **arrays,
    )


@dataclass
class Violation:
    kind: str  # "balance", "upper", "lower" or "bounds"
    line: int | None  # group index for "bounds"
    period: int
    slack: float


@dataclass
class FeasibilityReport:
    feasible: bool
    violations: list[Violation]
    outside_box: bool = False

    def __bool__(self):
        return self.feasible


def default_tol(line_limits) -> float:
    return 1e-6 * float(np.max(line_limits))


def merged_flows(p, d_tilde, ms: MergedSystem):
    """Line flows under the merged model; accepts leading batch axes."""
    p = np.asarray(p, dtype=float)
    d_tilde = np.asarray(d_tilde, dtype=float)
    unit = ms.ptdf_units @ p
    T, K = ms.num_periods, ms.num_groups
    batch = d_tilde.shape[:-2]
    # per-period slopes as a stacked matmul: (T, X, K) @ (T, K, L)
    stacked = np.moveaxis(d_tilde, -1, 0).reshape(T, -1, K)
    load = stacked @ ms.merged_ptdf.transpose(2, 1, 0)
    load = np.moveaxis(load.reshape((T,) + batch + (-1,)), 0, -1)
    return unit - load - ms.offsets


def original_flows(p, d, sys: PowerSystem):
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    return sys.ptdf_units @ p - sys.ptdf_loads @ d


def balance_gap(p, d):
    """Total generation minus total load per period."""
    return np.asarray(p).sum(axis=-2) - np.asarray(d).sum(axis=-2)


def _balance_ok(gap, loads, tol):
    scale = np.maximum(1.0, np.abs(np.asarray(loads)).sum(axis=-2))
    return np.abs(gap) <= tol * scale


def _collect(gap_ok, gap, up_slack, lo_slack, lines, tol, violations):
    for t in np.flatnonzero(~gap_ok):
        violations.append(Violation("balance", None, int(t), float(-abs(gap[t]))))
    for kind, slack in (("upper", up_slack), ("lower", lo_slack)):
        for i, t in np.argwhere(slack < -tol):
            violations.append(Violation(kind, int(lines[i]), int(t), float(slack[i, t])))


def check_merged_feasible(p, d_tilde, ms: MergedSystem, tol: float | None = None
                          ) -> FeasibilityReport:
    """Power balance and tightened limits of the merged model (active lines)."""
    p = getattr(p, "values", p)
    p = np.asarray(p, dtype=float)
    d_tilde = np.asarray(d_tilde, dtype=float)
    K, T = ms.num_groups, ms.num_periods
    if d_tilde.shape != (K, T) or p.shape != (ms.ptdf_units.shape[1], T):
        raise ValueError(f"dimension mismatch: p {p.shape}, d_tilde {d_tilde.shape}")
    tol = default_tol(ms.line_limits) if tol is None else tol
    violations: list[Violation] = []
    below = ms.merged_lower - tol > d_tilde
    above = d_tilde > ms.merged_upper + tol
    outside = bool(np.any(below | above))
    for k, t in np.argwhere(below | above):
        violations.append(Violation("bounds", int(k), int(t), 0.0))

    lines = ms.active_lines
    flows = merged_flows(p, d_tilde, ms)[lines]
    up = ms.tightened_upper[lines] - flows
    lo = flows - ms.tightened_lower[lines]
    gap = balance_gap(p, d_tilde)
    gap_ok = _balance_ok(gap, d_tilde, tol)
    constraint_violations: list[Violation] = []
    _collect(gap_ok, gap, up, lo, lines, tol, constraint_violations)
    return FeasibilityReport(not constraint_violations, violations + constraint_violations,
                             outside)


def check_original_feasible(p, d, sys: PowerSystem, tol: float | None = None,
                            lines=None) -> FeasibilityReport:
    """Power balance and the original line limits; ``lines`` restricts the check."""
    p = getattr(p, "values", p)
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    if d.shape != (sys.num_loads, sys.num_periods) or p.shape != (sys.num_units,
                                                                   sys.num_periods):
        raise ValueError(f"dimension mismatch: p {p.shape}, d {d.shape}")
    tol = default_tol(sys.line_limits) if tol is None else tol
    lines = np.arange(sys.num_lines) if lines is None else np.asarray(lines, dtype=int)
    outside = bool(np.any(d < sys.load_lower - tol) or np.any(d > sys.load_upper + tol))
    flows = original_flows(p, d, sys)[lines]
    F = sys.line_limits[lines][:, None]
    gap = balance_gap(p, d)
    violations: list[Violation] = []
    _collect(_balance_ok(gap, d, tol), gap, F - flows, flows + F, lines, tol, violations)
    return FeasibilityReport(not violations, violations, outside)
