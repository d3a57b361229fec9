"""JSON and CSV file formats.

All index lists written to files (partitions, lines, periods) are 1-based;
the Python API is 0-based.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .greedy import ApproxParams, MergeTrace
from .screen import ScreenResult
from .system import Partition, PowerSystem, validate_system
from .transform import MergedSystem


class FileFormatError(ValueError):
    """A file failed to parse or validate; ``errors`` lists located messages."""

    def __init__(self, path, errors):
        self.path = str(path)
        self.errors = list(errors)
        super().__init__(f"{path}: " + "; ".join(self.errors))


_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_tensor = {"type": "array", "items": _matrix}
_vector = {"type": "array", "items": {"type": "number"}}
_count = {"type": "integer", "minimum": 1}
_index_lists = {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}}

SYSTEM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "num_units", "num_loads", "num_lines", "num_periods",
                 "ptdf_units", "ptdf_loads", "line_limits", "load_lower", "load_upper"],
    "properties": {
        "version": {"const": 1},
        "num_units": _count,
        "num_loads": _count,
        "num_lines": _count,
        "num_periods": _count,
        "ptdf_units": _matrix,
        "ptdf_loads": _matrix,
        "line_limits": _vector,
        "load_lower": _matrix,
        "load_upper": _matrix,
        "unit_cap_lower": _matrix,
        "unit_cap_upper": _matrix,
        "budget": {},
    },
}

MERGED_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "kind", "num_units", "num_loads", "num_lines", "num_periods",
                 "num_groups", "partition", "active_lines", "ptdf_units", "line_limits",
                 "merged_ptdf", "offsets", "tightened_upper", "tightened_lower",
                 "merged_lower", "merged_upper", "error_sums", "infeasible_lines",
                 "beta", "eps", "provenance"],
    "properties": {
        "version": {"const": 1},
        "kind": {"const": "merged"},
        "num_units": _count,
        "num_loads": _count,
        "num_lines": _count,
        "num_periods": _count,
        "num_groups": _count,
        "partition": _index_lists,
        "active_lines": {"type": "array", "items": {"type": "integer"}},
        "pass_through_lines": {"type": "array", "items": {"type": "integer"}},
        "ptdf_units": _matrix,
        "line_limits": _vector,
        "merged_ptdf": _tensor,
        "offsets": _matrix,
        "tightened_upper": _matrix,
        "tightened_lower": _matrix,
        "merged_lower": _matrix,
        "merged_upper": _matrix,
        "error_sums": _matrix,
        "infeasible_lines": _index_lists,
        "beta": _tensor,
        "eps": _tensor,
        "budget": {},
        "provenance": {"type": "object"},
    },
}


def dumps(obj: dict) -> str:
    """One top-level key per line, values compact. Deterministic."""
    body = ",\n".join(f"  {json.dumps(k)}: {json.dumps(v, allow_nan=False)}"
                      for k, v in obj.items())
    return "{\n" + body + "\n}\n"


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_json(path, schema):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(path, [f"cannot read file: {exc.strerror or exc}"]) from exc
    except UnicodeDecodeError as exc:
        raise FileFormatError(path, [f"not UTF-8 text at byte {exc.start}"]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(path, [f"invalid JSON at line {exc.lineno} column {exc.colno}: "
                                     f"{exc.msg}"]) from exc
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for e in errors:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            msgs.append(f"{where}: {e.message}")
        raise FileFormatError(path, msgs)
    return data


def _array(data, key, ndim):
    try:
        arr = np.array(data[key], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{key}: ragged array") from exc
    if arr.ndim != ndim and arr.size:
        raise ValueError(f"{key}: expected a {ndim}-D array")
    return arr


def system_from_dict(data: dict, path="<memory>") -> PowerSystem:
    try:
        sys = PowerSystem(
            ptdf_units=_array(data, "ptdf_units", 2),
            ptdf_loads=_array(data, "ptdf_loads", 2),
            line_limits=_array(data, "line_limits", 1),
            load_lower=_array(data, "load_lower", 2),
            load_upper=_array(data, "load_upper", 2),
            unit_cap_lower=_array(data, "unit_cap_lower", 2) if "unit_cap_lower" in data else None,
            unit_cap_upper=_array(data, "unit_cap_upper", 2) if "unit_cap_upper" in data else None,
            budget=data.get("budget"),
            num_units=data["num_units"],
            num_loads=data["num_loads"],
            num_lines=data["num_lines"],
            num_periods=data["num_periods"],
        )
    except ValueError as exc:
        raise FileFormatError(path, [str(exc)]) from exc
    errors = validate_system(sys)
    if errors:
        raise FileFormatError(path, errors)
    return sys


def load_system(path) -> PowerSystem:
    return system_from_dict(_load_json(path, SYSTEM_SCHEMA), path)


def system_to_dict(sys: PowerSystem) -> dict:
    out = {
        "version": 1,
        "num_units": sys.num_units,
        "num_loads": sys.num_loads,
        "num_lines": sys.num_lines,
        "num_periods": sys.num_periods,
        "ptdf_units": sys.ptdf_units.tolist(),
        "ptdf_loads": sys.ptdf_loads.tolist(),
        "line_limits": sys.line_limits.tolist(),
        "load_lower": sys.load_lower.tolist(),
        "load_upper": sys.load_upper.tolist(),
    }
    if sys.has_unit_caps:
        out["unit_cap_lower"] = sys.unit_cap_lower.tolist()
        out["unit_cap_upper"] = sys.unit_cap_upper.tolist()
    if sys.budget is not None:
        out["budget"] = sys.budget
    return out


def save_system(sys: PowerSystem, path) -> None:
    Path(path).write_text(dumps(system_to_dict(sys)), encoding="utf-8")


def merged_to_dict(ms: MergedSystem, sys: PowerSystem, provenance: dict) -> dict:
    L, T = sys.num_lines, sys.num_periods
    out = {
        "version": 1,
        "kind": "merged",
        "num_units": sys.num_units,
        "num_loads": sys.num_loads,
        "num_lines": L,
        "num_periods": T,
        "num_groups": ms.num_groups,
        "partition": ms.partition.to_lists(one_based=True),
        "active_lines": [int(l) + 1 for l in ms.active_lines],
        "pass_through_lines": [int(l) + 1 for l in np.flatnonzero(~ms.active)],
        "ptdf_units": ms.ptdf_units.tolist(),
        "line_limits": ms.line_limits.tolist(),
        "merged_ptdf": ms.merged_ptdf.tolist(),
        "offsets": ms.offsets.tolist(),
        "tightened_upper": ms.tightened_upper.tolist(),
        "tightened_lower": ms.tightened_lower.tolist(),
        "merged_lower": ms.merged_lower.tolist(),
        "merged_upper": ms.merged_upper.tolist(),
        "error_sums": ms.error_sums.tolist(),
        "infeasible_lines": [[l + 1, t + 1] for l, t in sorted(ms.infeasible_lines)],
        "beta": ms.params.beta.tolist(),
        "eps": ms.params.eps.tolist(),
    }
    if sys.budget is not None:
        out["budget"] = sys.budget
    out["provenance"] = provenance
    return out


def save_merged(ms: MergedSystem, sys: PowerSystem, path, provenance: dict) -> None:
    Path(path).write_text(dumps(merged_to_dict(ms, sys, provenance)), encoding="utf-8")


def provenance(system_path, config: dict) -> dict:
    cfg = {k: (None if isinstance(v, float) and math.isinf(v) else v)
           for k, v in config.items()}
    return {
        "input_sha256": file_sha256(system_path),
        "tool": "colmerge",
        "tool_version": __version__,
        "config": cfg,
    }


def load_merged(path) -> tuple[MergedSystem, dict]:
    """Read a merged file back; returns the system and its provenance block."""
    data = _load_json(path, MERGED_SCHEMA)
    try:
        L, K, T = data["num_lines"], data["num_groups"], data["num_periods"]
        part = Partition.from_lists(data["partition"], one_based=True)
        part.check(data["num_loads"])
        if part.num_groups != K:
            raise ValueError("partition size disagrees with num_groups")
        alpha = _array(data, "merged_ptdf", 3)
        beta = _array(data, "beta", 3)
        eps = _array(data, "eps", 3)
        for name, arr in (("merged_ptdf", alpha), ("beta", beta), ("eps", eps)):
            if arr.shape != (L, K, T):
                raise ValueError(f"dimension mismatch: {name} has shape {arr.shape}")
        arrays = {k: _array(data, k, 2) for k in ("offsets", "tightened_upper",
                                                  "tightened_lower", "error_sums")}
        for k, arr in arrays.items():
            if arr.shape != (L, T):
                raise ValueError(f"dimension mismatch: {k} has shape {arr.shape}")
        shapes = {"merged_lower": (K, T), "merged_upper": (K, T), "line_limits": (L,),
                  "ptdf_units": (L, data["num_units"])}
        for k, shape in shapes.items():
            arr = _array(data, k, len(shape))
            if arr.shape != shape:
                raise ValueError(f"dimension mismatch: {k} has shape {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite value in {k}")
        if any(not 1 <= l <= L for l in data["active_lines"]):
            raise ValueError(f"active_lines: index outside 1..{L}")
        active = np.zeros(L, dtype=bool)
        active[[l - 1 for l in data["active_lines"]]] = True
        for arr in (alpha, beta, eps, *arrays.values()):
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite value in merged file")
    except (ValueError, IndexError) as exc:
        raise FileFormatError(path, [str(exc)]) from exc
    params = ApproxParams(part, alpha, beta, eps)
    ms = MergedSystem(
        partition=part,
        merged_ptdf=alpha,
        merged_lower=_array(data, "merged_lower", 2),
        merged_upper=_array(data, "merged_upper", 2),
        infeasible_lines=frozenset((l - 1, t - 1) for l, t in data["infeasible_lines"]),
        active=active,
        ptdf_units=_array(data, "ptdf_units", 2),
        line_limits=_array(data, "line_limits", 1),
        params=params,
        **arrays,
    )
    return ms, data["provenance"]


def screen_to_dict(res: ScreenResult) -> dict:
    redundant = sorted(res.redundant, key=lambda r: (r[0], r[2], r[1] != "upper"))
    return {
        "version": 1,
        "num_lines": res.num_lines,
        "num_periods": res.num_periods,
        "total_constraints": res.total_constraints,
        "redundant_count": len(res.redundant),
        "fully_inactive_count": len(res.fully_inactive_lines),
        "redundant": [[l + 1, d, t + 1] for l, d, t in redundant],
        "fully_inactive_lines": [l + 1 for l in sorted(res.fully_inactive_lines)],
        "active_lines": [l + 1 for l in res.active_lines],
        "notice": res.notice,
    }


def format_pair(pair) -> str:
    return "+".join("{" + ",".join(str(i + 1) for i in g) + "}" for g in pair)


TRACE_HEADER = ["K", "merged_pair", "max_delta", "avg_delta"]


def trace_csv(trace: MergeTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for s in trace.steps:
        w.writerow([s.k, format_pair(s.pair), repr(s.max_delta), repr(s.avg_delta)])
    return buf.getvalue()


def trace_sidecar(trace: MergeTrace, config: dict) -> dict:
    cfg = {k: (None if isinstance(v, float) and math.isinf(v) else v)
           for k, v in config.items()}
    return {
        "version": 1,
        "num_loads": trace.num_loads,
        "final_k": trace.final_k,
        "stop_reason": trace.stop_reason,
        "note": trace.note,
        "pair_solves": trace.pair_solves,
        "config": cfg,
        "steps": [
            {
                "K": s.k,
                "merged_pair": [[i + 1 for i in g] for g in s.pair],
                "max_delta": s.max_delta,
                "avg_delta": s.avg_delta,
                "eps_check": s.eps_check,
                "partition": s.partition.to_lists(one_based=True),
            }
            for s in trace.steps
        ],
    }


def sidecar_path(trace_path) -> Path:
    p = Path(trace_path)
    return p.with_name(p.name + ".json")


def save_trace(trace: MergeTrace, path, config: dict) -> None:
    Path(path).write_text(trace_csv(trace), encoding="utf-8", newline="")
    sidecar_path(path).write_text(dumps(trace_sidecar(trace, config)), encoding="utf-8")


def load_trace(path) -> tuple[list[dict], dict | None]:
    """Parse a trace CSV (and its sidecar when present)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(path, [f"cannot read file: {exc.strerror or exc}"]) from exc
    except UnicodeDecodeError as exc:
        raise FileFormatError(path, [f"not UTF-8 text at byte {exc.start}"]) from exc
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != TRACE_HEADER:
        raise FileFormatError(path, [f"line 1: expected header {','.join(TRACE_HEADER)}"])
    out = []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(TRACE_HEADER):
            raise FileFormatError(path, [f"line {n}: expected {len(TRACE_HEADER)} fields"])
        try:
            rec = {"K": int(row[0]), "merged_pair": row[1],
                   "max_delta": float(row[2]), "avg_delta": float(row[3])}
        except ValueError as exc:
            raise FileFormatError(path, [f"line {n}: {exc}"]) from exc
        if not (math.isfinite(rec["max_delta"]) and math.isfinite(rec["avg_delta"])):
            raise FileFormatError(path, [f"line {n}: non-finite delta"])
        out.append(rec)
    side = sidecar_path(path)
    meta = None
    if side.exists():
        try:
            meta = json.loads(side.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FileFormatError(side, [f"invalid JSON at line {exc.lineno}: {exc.msg}"]) from exc
    return out, meta
