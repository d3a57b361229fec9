"""Random instances for tests and experiment scripts."""

from __future__ import annotations

import numpy as np

from .system import PowerSystem


def random_system(rng, num_lines=6, num_loads=5, num_units=3, num_periods=2,
                  margin=(1.0, 1.5), time_varying=True, with_caps=True) -> PowerSystem:
    """A random instance whose limits leave room for every merge level.

    Limits are sized from the largest possible load-side flow, the flow of an
    even dispatch and twice the total box width, times a random margin. That
    keeps the even dispatch inside the tightened band even at one merged node.
    """
    rng = np.random.default_rng(rng)
    L, M, I, T = num_lines, num_loads, num_units, num_periods
    Gu = rng.uniform(-1, 1, size=(L, I))
    Gd = rng.uniform(-1, 1, size=(L, M))
    cols = T if time_varying else 1
    lower = rng.uniform(0, 5, size=(M, cols))
    upper = lower + rng.uniform(0, 10, size=(M, cols))
    lower = np.repeat(lower, T // cols, axis=1)
    upper = np.repeat(upper, T // cols, axis=1)
    load_flow = (np.abs(Gd) @ np.maximum(np.abs(lower), np.abs(upper))).max(axis=1)
    unit_flow = np.abs(Gu).sum(axis=1) * upper.sum(axis=0).max() / I
    widths = (upper - lower).sum(axis=0).max()
    F = (load_flow + unit_flow + 2.0 * widths) * rng.uniform(*margin, size=L)
    caps = None
    if with_caps:
        caps = np.full((I, T), upper.sum(axis=0).max())
    return PowerSystem(
        ptdf_units=Gu,
        ptdf_loads=Gd,
        line_limits=F,
        load_lower=lower,
        load_upper=upper,
        unit_cap_lower=None if caps is None else np.zeros((I, T)),
        unit_cap_upper=caps,
    )


def paper_scale_system(seed=0, num_lines=179, num_loads=91, num_units=54, num_periods=24):
    """Random instance with the dimensions of a 118-bus day-ahead case.

    Loads get +/-10% bands around a daily profile, capacities are sized so
    the screen finds some lines that cannot bind.
    """
    rng = np.random.default_rng(seed)
    L, M, I, T = num_lines, num_loads, num_units, num_periods
    Gu = rng.uniform(-1, 1, size=(L, I)) * rng.uniform(0, 1, size=(L, 1)) ** 2
    Gd = rng.uniform(-1, 1, size=(L, M)) * rng.uniform(0, 1, size=(L, 1)) ** 2
    profile = 0.75 + 0.25 * np.sin(np.linspace(0, 2 * np.pi, T, endpoint=False) - 1.5)
    base = rng.uniform(10, 80, size=(M, 1)) * profile[None, :]
    lower, upper = 0.9 * base, 1.1 * base
    cap_hi = np.repeat(rng.uniform(50, 300, size=(I, 1)), T, axis=1)
    cap_lo = 0.3 * cap_hi
    typical = np.abs(Gd) @ base.mean(axis=1)
    F = np.maximum(typical * rng.uniform(0.8, 3.0, size=L), 25.0)
    return PowerSystem(
        ptdf_units=Gu, ptdf_loads=Gd, line_limits=F, load_lower=lower, load_upper=upper,
        unit_cap_lower=cap_lo, unit_cap_upper=cap_hi,
    )
