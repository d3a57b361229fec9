"""Merge eight wind-farm injection nodes one pair at a time and print the trace.

Farms sit on a handful of nearby buses, so a few PTDF columns are close to
each other and merge almost for free before the errors start to climb.

    python3 scripts/wind_trace_demo.py
"""

import argparse

import numpy as np

from colmerge import PowerSystem
from colmerge.greedy import MergeConfig, greedy_merge


def wind_system(seed=0, num_lines=30, num_farms=8, num_units=10, num_periods=24):
    rng = np.random.default_rng(seed)
    # farms come in clusters; columns inside a cluster differ only a little
    centres = rng.uniform(-0.6, 0.6, size=(num_lines, 3))
    cluster = rng.integers(0, 3, size=num_farms)
    Gd = centres[:, cluster] + rng.normal(0, 0.05, size=(num_lines, num_farms))
    Gu = rng.uniform(-0.5, 0.5, size=(num_lines, num_units))
    forecast = rng.uniform(40, 120, size=(num_farms, 1)) * (
        0.6 + 0.4 * np.cos(np.linspace(0, 2 * np.pi, num_periods))[None, :])
    spread = 0.25 * forecast
    F = rng.uniform(150, 400, size=num_lines)
    return PowerSystem(Gu, Gd, F, forecast - spread, forecast + spread)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--e-req", type=float, default=float("inf"))
    args = ap.parse_args()

    sys = wind_system(args.seed)
    _, _, trace = greedy_merge(sys, MergeConfig(k_req=1, e_req=args.e_req))
    print(f"{'K':>2}  {'node indices':<40} {'max delta':>9} {'avg delta':>9}")
    print(f"{sys.num_loads:>2}  {'(original)':<40} {0.0:>9.2%} {0.0:>9.2%}")
    for s in trace.steps:
        print(f"{s.k:>2}  {str(s.partition):<40} {s.max_delta:>9.2%} {s.avg_delta:>9.2%}")
    print(f"stopped: {trace.note}; {trace.pair_solves} pair solves")


if __name__ == "__main__":
    main()
