"""Serialization of sweep results: JSON, CSV and a markdown summary."""
from __future__ import annotations

import csv
import io
import json

from .sweep import SCHEMA_VERSION, SweepResult


def _check(result: SweepResult):
    if not result.records:
        raise ValueError("result has no per-R records")


def dumps_json(obj: dict) -> str:
    out = dict(obj)
    out.setdefault("schema_version", SCHEMA_VERSION)
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def to_json(result: SweepResult) -> str:
    _check(result)
    return dumps_json(result.to_dict())


def from_json(text: str) -> SweepResult:
    d = json.loads(text)
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
    return SweepResult.from_dict(d)


def to_csv(result: SweepResult) -> str:
    _check(result)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["R", "lhs", "rhs", "ratio", "time"])
    for r in result.records:
        w.writerow([r["R"], repr(r["lhs"]), repr(r["rhs"]), repr(r["ratio"]), f"{r['time']:.6f}"])
    return buf.getvalue()


def to_markdown(result: SweepResult) -> str:
    _check(result)
    c = result.config
    lines = [f"# Sweep: {c['example']} ({c['curve']}), exponent {c['exponent']}, p = {c['p']}",
             "",
             f"backend: {c['backend']}",
             "",
             "| predicted slope | fitted slope | stderr | tolerance | verdict |",
             "|---|---|---|---|---|",
             f"| {result.predicted_slope:.6f} | {result.fitted_slope:.6f} | "
             f"{result.slope_stderr:.6f} | {result.tolerance:g} | {result.verdict} |",
             "",
             "| R | lhs | rhs | ratio | time (s) |",
             "|---|---|---|---|---|"]
    for r in result.records:
        lines.append(f"| {r['R']} | {r['lhs']:.6e} | {r['rhs']:.6e} | {r['ratio']:.6f} | {r['time']:.3f} |")
    lines.append("")
    lines.append(f"fit uses R in {result.fit_R}")
    lines += result.notes
    return "\n".join(lines) + "\n"


def render(result: SweepResult, fmt: str) -> str:
    if fmt == "json":
        return to_json(result)
    if fmt == "csv":
        return to_csv(result)
    if fmt in ("markdown", "md"):
        return to_markdown(result)
    raise ValueError(f"unknown format {fmt!r}")
