"""Conservative screen for transmission constraints that can never bind.

Each line flow ``sum_i Gu[l,i] p_i - sum_m Gd[l,m] d_m`` is bounded with
interval arithmetic: a unit contributes anything between 0 (switched off)
and its capacity range, a load anything in its box. Power balance coupling is
ignored, so the bound is loose but never marks a bindable constraint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .system import PowerSystem


@dataclass(frozen=True)
class ScreenResult:
    num_lines: int
    num_periods: int
    redundant: frozenset  # {(line, "upper" | "lower", period)}
    fully_inactive_lines: frozenset
    notice: str | None = None

    @property
    def total_constraints(self) -> int:
        return 2 * self.num_lines * self.num_periods

    @property
    def active_lines(self) -> list[int]:
        return [l for l in range(self.num_lines) if l not in self.fully_inactive_lines]


def flow_range(sys: PowerSystem):
    """Interval bounds (sup, inf) of every line flow, each of shape (L, T)."""
    Gu = sys.ptdf_units[:, :, None]
    Gd = sys.ptdf_loads[:, :, None]
    u_lo = Gu * sys.unit_cap_lower[None]
    u_hi = Gu * sys.unit_cap_upper[None]
    d_lo = Gd * sys.load_lower[None]
    d_hi = Gd * sys.load_upper[None]
    sup = (np.maximum(np.maximum(u_lo, u_hi), 0.0).sum(axis=1)
           - np.minimum(d_lo, d_hi).sum(axis=1))
    inf = (np.minimum(np.minimum(u_lo, u_hi), 0.0).sum(axis=1)
           - np.maximum(d_lo, d_hi).sum(axis=1))
    return sup, inf


def screen_redundant(sys: PowerSystem) -> ScreenResult:
    L, T = sys.num_lines, sys.num_periods
    if not sys.has_unit_caps:
        return ScreenResult(L, T, frozenset(), frozenset(),
                            notice="no unit capacities given; screening disabled")
    sup, inf = flow_range(sys)
    F = sys.line_limits[:, None]
    up = sup <= F
    lo = inf >= -F
    redundant = {(int(l), "upper", int(t)) for l, t in np.argwhere(up)}
    redundant |= {(int(l), "lower", int(t)) for l, t in np.argwhere(lo)}
    inactive = frozenset(int(l) for l in np.flatnonzero((up & lo).all(axis=1)))
    return ScreenResult(L, T, frozenset(redundant), inactive)
