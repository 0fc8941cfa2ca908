"""Deterministic serialisation of check reports.

Floats are written in scientific notation with twelve significant digits and
keys are sorted, so identical runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict
from typing import Iterable

from .checks import IdentityReport


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return f"{x:.12e}"


def _json_value(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _fmt_float(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, dict):
        items = ", ".join(f'"{k}": {_json_value(v[k])}' for k in sorted(v))
        return "{" + items + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    try:
        return _fmt_float(float(v))
    except (TypeError, ValueError):
        return _json_value(str(v))


def render_json(report: dict) -> str:
    return _json_value(report) + "\n"


def report_payload(meta: dict, results: Iterable[IdentityReport]) -> dict:
    rows = [asdict(r) for r in results]
    summary = {
        "pass": sum(1 for r in rows if r["verdict"] == "Pass"),
        "fail": sum(1 for r in rows if r["verdict"] == "Fail"),
        "skipped": sum(1 for r in rows if r["verdict"] == "Skipped"),
    }
    return {"meta": meta, "results": rows, "summary": summary}


_CSV_FIELDS = [
    "check_id", "point", "lhs", "rhs", "residual_abs", "residual_rel",
    "tolerance", "verdict", "reason",
]


def render_csv(results: Iterable[IdentityReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_FIELDS)
    for r in results:
        point = "" if r.point is None else ";".join(f"{x:.12e}" for x in r.point)
        writer.writerow([
            r.check_id, point,
            f"{r.lhs:.12e}", f"{r.rhs:.12e}", f"{r.residual_abs:.12e}",
            f"{r.residual_rel:.12e}", f"{r.tolerance:.12e}", r.verdict, r.reason or "",
        ])
    return buf.getvalue()


def render_table(results: Iterable[IdentityReport]) -> str:
    lines = [f"{'check':26s} {'verdict':8s} {'residual':>12s} {'tol':>9s}  point / reason"]
    for r in results:
        tail = r.reason or (
            "" if r.point is None else "(" + ", ".join(f"{x:.4g}" for x in r.point) + ")"
        )
        res = "" if math.isnan(r.residual_abs) else f"{r.residual_abs:.3e}"
        lines.append(
            f"{r.check_id:26s} {r.verdict.upper() if r.verdict == 'Fail' else r.verdict:8s}"
            f" {res:>12s} {r.tolerance:>9.1e}  {tail}"
        )
    return "\n".join(lines) + "\n"


def render_report(payload: dict, results: list[IdentityReport], fmt: str) -> str:
    if fmt == "json":
        return render_json(payload)
    if fmt == "csv":
        return render_csv(results)
    if fmt == "table":
        return render_table(results)
    raise ValueError(f"unknown format {fmt!r}")


def render_flow_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    fields = list(rows[0])
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([
            row[f] if isinstance(row[f], int) else f"{row[f]:.12e}" for f in fields
        ])
    return buf.getvalue()
