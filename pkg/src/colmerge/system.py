"""Problem instance, dispatch schedules and load partitions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np


def _frozen(a):
    if a is None:
        return None
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PowerSystem:
    """A transmission-constrained instance with box-bounded net loads.

    Arrays are stored as read-only float arrays. No checks run on
    construction; call :func:`validate_system` to get a list of problems.
    """

    ptdf_units: np.ndarray  # L x I
    ptdf_loads: np.ndarray  # L x M
    line_limits: np.ndarray  # L
    load_lower: np.ndarray  # M x T
    load_upper: np.ndarray  # M x T
    unit_cap_lower: np.ndarray | None = None  # I x T
    unit_cap_upper: np.ndarray | None = None  # I x T
    budget: Any = None  # opaque pass-through, never interpreted
    num_units: int | None = None
    num_loads: int | None = None
    num_lines: int | None = None
    num_periods: int | None = None

    def __post_init__(self):
        for name in ("ptdf_units", "ptdf_loads", "line_limits", "load_lower",
                     "load_upper", "unit_cap_lower", "unit_cap_upper"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        # declared counts default to what the arrays say
        shapes = {
            "num_lines": self.line_limits.shape[0] if self.line_limits.ndim == 1 else None,
            "num_units": self.ptdf_units.shape[1] if self.ptdf_units.ndim == 2 else None,
            "num_loads": self.ptdf_loads.shape[1] if self.ptdf_loads.ndim == 2 else None,
            "num_periods": self.load_lower.shape[1] if self.load_lower.ndim == 2 else None,
        }
        for name, inferred in shapes.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, inferred)

    @classmethod
    def from_bounds(cls, ptdf_units, ptdf_loads, line_limits, load_lower, load_upper,
                    num_periods=1, unit_cap_lower=None, unit_cap_upper=None, budget=None):
        """Build a system, broadcasting 1-D bounds over ``num_periods`` periods."""

        def widen(b):
            if b is None:
                return None
            b = np.asarray(b, dtype=float)
            if b.ndim == 1:
                b = np.repeat(b[:, None], num_periods, axis=1)
            return b

        return cls(
            ptdf_units=ptdf_units,
            ptdf_loads=ptdf_loads,
            line_limits=line_limits,
            load_lower=widen(load_lower),
            load_upper=widen(load_upper),
            unit_cap_lower=widen(unit_cap_lower),
            unit_cap_upper=widen(unit_cap_upper),
            budget=budget,
        )

    @property
    def has_unit_caps(self) -> bool:
        return self.unit_cap_lower is not None and self.unit_cap_upper is not None

    @property
    def load_widths(self) -> np.ndarray:
        return self.load_upper - self.load_lower


def _check_finite(name, arr, errors):
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        errors.append(f"non-finite value in {name} at {idx}")


def validate_system(sys: PowerSystem) -> list[str]:
    """Return every invariant violation found in ``sys`` (empty list means ok)."""
    errors: list[str] = []
    I, M, L, T = sys.num_units, sys.num_loads, sys.num_lines, sys.num_periods
    for name, value in (("num_units", I), ("num_loads", M), ("num_lines", L),
                        ("num_periods", T)):
        if value is None or value < 1:
            errors.append(f"{name} must be a positive count, got {value}")
    if errors:
        return errors

    expected = {
        "ptdf_units": (L, I),
        "ptdf_loads": (L, M),
        "line_limits": (L,),
        "load_lower": (M, T),
        "load_upper": (M, T),
    }
    if sys.unit_cap_lower is not None or sys.unit_cap_upper is not None:
        if sys.unit_cap_lower is None or sys.unit_cap_upper is None:
            errors.append("unit_cap_lower and unit_cap_upper must be given together")
        else:
            expected["unit_cap_lower"] = (I, T)
            expected["unit_cap_upper"] = (I, T)

    shape_ok = True
    for name, shape in expected.items():
        arr = getattr(sys, name)
        if arr.shape != shape:
            errors.append(f"dimension mismatch: {name} has shape {arr.shape}, expected {shape}")
            shape_ok = False
    for name in expected:
        _check_finite(name, getattr(sys, name), errors)
    if not shape_ok:
        return errors

    bad = np.argwhere(~(sys.line_limits > 0))
    for (l,) in bad:
        if np.isfinite(sys.line_limits[l]):
            errors.append(f"line limit at ({l}) must be strictly positive")
    for (m, t) in np.argwhere(sys.load_lower > sys.load_upper):
        errors.append(f"inverted bound at ({m},{t})")
    if "unit_cap_lower" in expected:
        for (i, t) in np.argwhere(sys.unit_cap_lower > sys.unit_cap_upper):
            errors.append(f"inverted unit capacity at ({i},{t})")
    return errors


@dataclass(frozen=True, eq=False)
class DispatchSchedule:
    values: np.ndarray  # I x T

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("dispatch schedule must be finite")


@dataclass(frozen=True)
class Partition:
    """Disjoint cover of load indices, kept in canonical order.

    Members are ascending inside each group and groups are sorted by their
    smallest member. Indices are 0-based.
    """

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        groups = [tuple(sorted(int(i) for i in g)) for g in self.groups]
        if any(len(g) == 0 for g in groups):
            raise ValueError("partition groups must be nonempty")
        groups.sort(key=lambda g: g[0])
        object.__setattr__(self, "groups", tuple(groups))

    @classmethod
    def identity(cls, num_loads: int) -> "Partition":
        return cls(tuple((m,) for m in range(num_loads)))

    @property
    def num_groups(self) -> int:
        return len(self.groups)

    @property
    def num_members(self) -> int:
        return sum(len(g) for g in self.groups)

    def sizes(self) -> list[int]:
        return [len(g) for g in self.groups]

    def check(self, num_loads: int) -> None:
        seen = [i for g in self.groups for i in g]
        if sorted(seen) != list(range(num_loads)):
            raise ValueError(
                f"partition does not cover 0..{num_loads - 1} exactly once: {self.groups}"
            )

    def merge(self, j1: int, j2: int) -> "Partition":
        """Replace groups ``j1`` and ``j2`` by their union."""
        if j1 == j2:
            raise ValueError("cannot merge a group with itself")
        union = self.groups[j1] + self.groups[j2]
        rest = [g for j, g in enumerate(self.groups) if j not in (j1, j2)]
        return Partition(tuple(rest) + (union,))

    def index_of(self, group: Sequence[int]) -> int:
        return self.groups.index(tuple(sorted(group)))

    def membership(self, num_loads: int | None = None) -> np.ndarray:
        """K x M 0/1 matrix mapping loads to groups."""
        M = self.num_members if num_loads is None else num_loads
        G = np.zeros((self.num_groups, M))
        for k, g in enumerate(self.groups):
            G[k, list(g)] = 1.0
        return G

    def to_lists(self, one_based: bool = False) -> list[list[int]]:
        off = 1 if one_based else 0
        return [[i + off for i in g] for g in self.groups]

    @classmethod
    def from_lists(cls, groups: Iterable[Iterable[int]], one_based: bool = False):
        off = 1 if one_based else 0
        return cls(tuple(tuple(int(i) - off for i in g) for g in groups))

    def __str__(self):
        return ",".join("{" + ",".join(str(i + 1) for i in g) + "}" for g in self.groups)


def aggregate_scenario(d, part: Partition) -> np.ndarray:
    """Sum load realisations over each group: (M, T) -> (K, T).

    Leading batch axes are allowed, i.e. (..., M, T) -> (..., K, T).
    """
    d = np.asarray(d, dtype=float)
    if d.ndim < 2:
        raise ValueError("scenario must be at least 2-D (M x T)")
    M = d.shape[-2]
    if part.num_members != M or max(i for g in part.groups for i in g) >= M:
        raise ValueError(f"partition covers {part.num_members} loads, scenario has {M}")
    return np.stack([d[..., list(g), :].sum(axis=-2) for g in part.groups], axis=-2)
