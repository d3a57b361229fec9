"""Command line entry point: ``colmerge {merge,screen,verify,report}``."""

from __future__ import annotations

import argparse
import json
import math
import sys as _sys
from pathlib import Path

from . import files
from .greedy import MergeConfig, greedy_merge
from .screen import screen_redundant
from .transform import build_merged_system
from .verify import bound_attainment_sweep, delta_metrics, run_theorem1_audit

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3


def _err(msg):
    print(msg, file=_sys.stderr)


def cmd_merge(args) -> int:
    system = files.load_system(args.system)
    active = None
    if args.screen:
        res = screen_redundant(system)
        if res.notice:
            _err(f"notice: {res.notice}")
        else:
            active = res.active_lines
            print(f"screen: {len(res.redundant)} of {res.total_constraints} constraints "
                  f"redundant, {len(res.fully_inactive_lines)} lines fully inactive")
    if args.k_req > system.num_loads:
        _err(f"notice: k-req {args.k_req} exceeds the {system.num_loads} loads; nothing to merge")
    cfg = MergeConfig(
        k_req=args.k_req,
        e_req=args.e_req,
        relative_threshold=not args.absolute_threshold,
        active_lines=active,
    )
    part, params, trace = greedy_merge(system, cfg)
    ms = build_merged_system(system, part, params, active)
    config = {
        "k_req": args.k_req,
        "e_req": args.e_req,
        "relative_threshold": cfg.relative_threshold,
        "screen": bool(args.screen),
    }
    files.save_merged(ms, system, args.out, files.provenance(args.system, config))
    files.save_trace(trace, args.trace, config)

    if trace.stop_reason == "e_req":
        _err(f"notice: {trace.note}")
    max_d = trace.steps[-1].max_delta if trace.steps else 0.0
    print(f"merged {system.num_loads} loads into {ms.num_groups} groups "
          f"(max delta {max_d:.4%}): {part}")
    if ms.infeasible_lines:
        pairs = ", ".join(f"({l + 1},{t + 1})" for l, t in sorted(ms.infeasible_lines))
        _err(f"infeasible: accumulated error reaches the limit on (line, period) {pairs}")
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_screen(args) -> int:
    system = files.load_system(args.system)
    res = screen_redundant(system)
    Path(args.out).write_text(files.dumps(files.screen_to_dict(res)), encoding="utf-8")
    if res.notice:
        _err(f"notice: {res.notice}")
    print(f"total constraints: {res.total_constraints}")
    share = len(res.redundant) / res.total_constraints
    print(f"redundant: {len(res.redundant)} ({share:.1%})")
    print(f"fully inactive lines: {len(res.fully_inactive_lines)}")
    return EXIT_OK


def cmd_verify(args) -> int:
    system = files.load_system(args.system)
    ms, prov = files.load_merged(args.merged)
    if (ms.num_lines, ms.partition.num_members) != (system.num_lines, system.num_loads):
        raise files.FileFormatError(args.merged, ["merged file does not match the system"])
    if prov.get("input_sha256") not in (None, files.file_sha256(args.system)):
        _err("warning: merged file was produced from a different system file")
    report = run_theorem1_audit(system, ms, samples=args.samples, seed=args.seed)
    sweep = bound_attainment_sweep(system, ms.partition, ms.params, ms.active_lines,
                                   seed=args.seed)
    out = report.to_dict()
    out["bound_sweep"] = {
        "worst_slack": sweep.worst_slack,
        "min_slack": sweep.min_slack,
        "exact": sweep.exact,
        "passed": sweep.passed,
        "checked": sweep.checked,
    }
    if ms.active_lines.size:
        out["max_delta"], out["avg_delta"] = delta_metrics(ms, system)
    passed = report.passed and sweep.passed
    out["passed"] = passed
    Path(args.out).write_text(json.dumps(out, indent=2) + "\n", encoding="utf-8")
    print(report.summary())
    return EXIT_OK if passed else EXIT_FAIL


def cmd_report(args) -> int:
    rows, meta = files.load_trace(args.trace)
    start = []
    if meta is not None and "num_loads" in meta:
        start = [{"K": meta["num_loads"], "merged_pair": "", "max_delta": 0.0,
                  "avg_delta": 0.0, "partition": None}]
        parts = {s["K"]: s.get("partition") for s in meta.get("steps", [])}
        M = meta["num_loads"]
        start[0]["partition"] = [[m] for m in range(1, M + 1)]
        for r in rows:
            r["partition"] = parts.get(r["K"])
    series = start + rows
    if args.format == "json":
        curve = {
            "K": [r["K"] for r in series],
            "max_delta": [r["max_delta"] for r in series],
            "avg_delta": [r["avg_delta"] for r in series],
        }
        if meta is not None:
            curve["stop_reason"] = meta.get("stop_reason")
        _sys.stdout.write(json.dumps(curve) + "\n")
    else:
        lines = ["K,node_indices,max_delta,avg_delta"]
        for r in series:
            groups = r.get("partition")
            nodes = ",".join("{" + ",".join(map(str, g)) + "}" for g in groups) if groups else ""
            lines.append(f'{r["K"]},"{nodes}",{r["max_delta"]!r},{r["avg_delta"]!r}')
        _sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _budget(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="colmerge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    m = sub.add_parser("merge", help="merge uncertain load nodes")
    m.add_argument("--system", required=True, type=Path)
    m.add_argument("--k-req", required=True, type=_positive_int)
    m.add_argument("--e-req", type=_budget, default=math.inf)
    m.add_argument("--absolute-threshold", action="store_true",
                   help="compare the budget with MW sums instead of fractions of the limit")
    m.add_argument("--screen", dest="screen", action="store_true", default=True)
    m.add_argument("--no-screen", dest="screen", action="store_false")
    m.add_argument("--out", required=True, type=Path)
    m.add_argument("--trace", required=True, type=Path)
    m.set_defaults(func=cmd_merge)

    s = sub.add_parser("screen", help="find transmission constraints that cannot bind")
    s.add_argument("--system", required=True, type=Path)
    s.add_argument("--out", required=True, type=Path)
    s.set_defaults(func=cmd_screen)

    v = sub.add_parser("verify", help="audit a merged file against its system")
    v.add_argument("--system", required=True, type=Path)
    v.add_argument("--merged", required=True, type=Path)
    v.add_argument("--samples", type=_positive_int, default=100_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", required=True, type=Path)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", help="re-emit a merge trace as a table or curve")
    r.add_argument("--trace", required=True, type=Path)
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except files.FileFormatError as exc:
        _err(f"error: {exc.path}")
        for e in exc.errors:
            _err(f"  {e}")
        return EXIT_INVALID
    except (OSError, ValueError) as exc:
        _err(f"error: {exc}")
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
