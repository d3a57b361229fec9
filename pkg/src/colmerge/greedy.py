"""Greedy agglomerative merging of uncertain load nodes.

Starting from singleton groups, the pair of groups whose union has the
smallest worst-line approximation error is merged, until either the
requested number of groups is reached or the accumulated error would reach
the error budget. Pair errors are cached so each iteration after the first
only solves the pairs involving the group created by the previous merge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .system import Partition, PowerSystem
from .uniform import solve_batched


@dataclass
class MergeConfig:
    k_req: int
    e_req: float = math.inf
    relative_threshold: bool = True
    # None means every line is protected
    active_lines: Sequence[int] | None = None

    def __post_init__(self):
        if int(self.k_req) < 1:
            raise ValueError("k_req must be at least 1")
        if not (self.e_req > 0):
            raise ValueError("e_req must be positive (or inf)")

    def lines(self, num_lines: int) -> np.ndarray:
        if self.active_lines is None:
            return np.arange(num_lines)
        lines = np.array(sorted(set(int(l) for l in self.active_lines)), dtype=int)
        if lines.size and (lines[0] < 0 or lines[-1] >= num_lines):
            raise ValueError("active line index out of range")
        return lines


@dataclass(frozen=True, eq=False)
class ApproxParams:
    """Slopes, offsets and worst-case errors per (line, group, period).

    Offsets refer to the original (unshifted) load variables, so for every
    group k the bound ``|sum_j G[l, h_j] d_j - alpha[l,k,t]*dsum - beta[l,k,t]|
    <= eps[l,k,t]`` holds on the load box.
    """

    partition: Partition
    alpha: np.ndarray  # L x K x T
    beta: np.ndarray
    eps: np.ndarray

    @property
    def shape(self):
        return self.alpha.shape


def group_params(sys: PowerSystem, group: Sequence[int], lines=None):
    """Solve every (line, period) minimax problem for one group of loads."""
    members = list(group)
    G = sys.ptdf_loads if lines is None else sys.ptdf_loads[lines]
    coeffs = G[:, members]
    lower = sys.load_lower[members]
    widths = sys.load_upper[members] - lower
    alpha, beta0, eps = solve_batched(coeffs, widths)
    # undo the shift to a zero lower corner
    beta = beta0 + coeffs @ lower - alpha * lower.sum(axis=0)[None, :]
    return alpha, beta, eps


def compute_params(sys: PowerSystem, part: Partition) -> ApproxParams:
    part.check(sys.num_loads)
    L, K, T = sys.num_lines, part.num_groups, sys.num_periods
    alpha = np.empty((L, K, T))
    beta = np.empty((L, K, T))
    eps = np.empty((L, K, T))
    for k, g in enumerate(part.groups):
        alpha[:, k], beta[:, k], eps[:, k] = group_params(sys, g)
    for a in (alpha, beta, eps):
        a.setflags(write=False)
    return ApproxParams(part, alpha, beta, eps)


def pair_merge_error(sys: PowerSystem, part: Partition, j1: int, j2: int,
                     active_lines=None) -> np.ndarray:
    """Errors of the union of groups ``j1`` and ``j2``, shape (active lines, T).

    The union is solved from scratch; errors of the two parts are not reused.
    """
    K = part.num_groups
    if j1 == j2 or not (0 <= j1 < K and 0 <= j2 < K):
        raise ValueError(f"invalid group pair ({j1}, {j2}) for {K} groups")
    lines = np.arange(sys.num_lines) if active_lines is None else np.asarray(active_lines)
    union = sorted(part.groups[j1] + part.groups[j2])
    if lines.size == 0:
        return np.zeros((0, sys.num_periods))
    _, _, eps = group_params(sys, union, lines)
    return eps


def _pair_key(a: tuple, b: tuple) -> tuple:
    return (a, b) if a[0] < b[0] else (b, a)


class PairErrorCache:
    """Pair errors keyed by the unordered pair of member tuples."""

    def __init__(self):
        self._store: dict[tuple, np.ndarray] = {}
        self._worst: dict[tuple, float] = {}
        self.solves = 0

    def __contains__(self, key):
        return key in self._store

    def __len__(self):
        return len(self._store)

    def get(self, a, b):
        return self._store[_pair_key(a, b)]

    def worst(self, a, b) -> float:
        return self._worst[_pair_key(a, b)]

    def put(self, a, b, column):
        key = _pair_key(a, b)
        self._store[key] = column
        self._worst[key] = float(column.max()) if column.size else 0.0

    def items(self):
        return self._store.items()

    def discard_group(self, g):
        for key in [k for k in self._store if g in k]:
            del self._store[key]
            del self._worst[key]


def select_best_pair(cache: PairErrorCache, part: Partition) -> tuple[int, int]:
    """Pair of group positions with the smallest worst (line, period) error.

    Ties go to the lexicographically smallest ``(j1, j2)``.
    """
    K = part.num_groups
    if K < 2:
        raise ValueError("need at least two groups to select a pair")
    best = None
    best_val = math.inf
    for j1 in range(K):
        for j2 in range(j1 + 1, K):
            val = cache.worst(part.groups[j1], part.groups[j2])
            if best is None or val < best_val:
                best, best_val = (j1, j2), val
    return best


@dataclass(frozen=True)
class MergeStep:
    k: int  # number of groups after the merge
    pair: tuple[tuple[int, ...], tuple[int, ...]]
    max_delta: float
    avg_delta: float
    eps_check: float
    partition: Partition


@dataclass
class MergeTrace:
    num_loads: int
    steps: list[MergeStep] = field(default_factory=list)
    stop_reason: str = "k_req"
    pair_solves: int = 0
    # number of groups at the start of every iteration that solved pairs
    iteration_sizes: list[int] = field(default_factory=list)

    @property
    def final_k(self) -> int:
        return self.num_loads - len(self.steps)

    def expected_solves(self) -> int:
        """Pair-solve count predicted by the caching scheme."""
        if not self.iteration_sizes:
            return 0
        first, rest = self.iteration_sizes[0], self.iteration_sizes[1:]
        return first * (first - 1) // 2 + sum(k - 1 for k in rest)

    @property
    def note(self) -> str:
        if self.stop_reason == "e_req" and not self.steps:
            return "stopped by error budget before any merge"
        if self.stop_reason == "e_req":
            return f"stopped by error budget at K={self.final_k}"
        return f"reached K={self.final_k}"


class MergeResult(NamedTuple):
    partition: Partition
    params: ApproxParams
    trace: MergeTrace


def delta_from_totals(totals: np.ndarray, limits: np.ndarray) -> tuple[float, float]:
    """Max and average relative accumulated error for (lines, T) error sums."""
    if totals.shape[0] == 0:
        return 0.0, 0.0
    per_line = (totals / limits[:, None]).max(axis=1)
    return float(per_line.max()), float(per_line.mean())


def greedy_merge(sys: PowerSystem, cfg: MergeConfig, cache: PairErrorCache | None = None
                 ) -> MergeResult:
    M, T = sys.num_loads, sys.num_periods
    lines = cfg.lines(sys.num_lines)
    limits = sys.line_limits[lines]
    scale = limits[:, None] if cfg.relative_threshold else np.ones((lines.size, 1))
    cache = PairErrorCache() if cache is None else cache

    part = Partition.identity(M)
    group_eps = {g: np.zeros((lines.size, T)) for g in part.groups}
    trace = MergeTrace(num_loads=M)

    while part.num_groups > cfg.k_req:
        K = part.num_groups
        trace.iteration_sizes.append(K)
        for j1 in range(K):
            for j2 in range(j1 + 1, K):
                a, b = part.groups[j1], part.groups[j2]
                if _pair_key(a, b) not in cache:
                    cache.put(a, b, pair_merge_error(sys, part, j1, j2, lines))
                    cache.solves += 1
                    trace.pair_solves += 1

        j1, j2 = select_best_pair(cache, part)
        a, b = part.groups[j1], part.groups[j2]
        union_eps = cache.get(a, b)
        candidate = part.merge(j1, j2)
        candidate_eps = {g: group_eps[g] for g in part.groups if g not in (a, b)}
        candidate_eps[tuple(sorted(a + b))] = union_eps
        totals = _sum_groups(candidate, candidate_eps, lines.size, T)
        eps_check = float((totals / scale).max()) if totals.size else 0.0
        if eps_check >= cfg.e_req:
            trace.stop_reason = "e_req"
            break

        part, group_eps = candidate, candidate_eps
        cache.discard_group(a)
        cache.discard_group(b)
        max_d, avg_d = delta_from_totals(totals, limits)
        trace.steps.append(MergeStep(part.num_groups, (a, b), max_d, avg_d, eps_check, part))

    return MergeResult(part, compute_params(sys, part), trace)


def _sum_groups(part, group_eps, n_lines, T):
    totals = np.zeros((n_lines, T))
    for g in part.groups:
        totals = totals + group_eps[g]
    return totals
