"""Command-line front door.

Subcommands: ``catalog list``, ``verify``, ``angles``, ``flow``.  Reports are
deterministic: the sampling seed fixes every evaluated point, floats are
serialised with twelve significant digits, and parallel execution (capped by
the KAL_THREADS environment variable) aggregates results in registry order.

Exit codes: 0 when nothing failed, 1 when any check failed, 2 for bad
configuration.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .angles import angle_data
from .catalog import catalog_ids, resolve_immersion
from .checks import REGISTRY, CheckSettings, IdentityReport, run_check, select_checks
from .errors import ConfigError
from .flow import dichotomy_report, discretize, run_flow
from .report import render_flow_csv, render_json, render_report, report_payload
from . import __version__

_TARGET_IDS = ["flat-c{m}", "torus-c{m}", "cp{m}-K{value}", "hk-r4", "hk-r8"]
_RESAMPLE_LIMIT = 100
_RESAMPLE_REASONS = ("complex direction", "Lagrangian")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("KAL_THREADS", "1")))
    except ValueError:
        return 1


def _sample_point(rng: np.random.Generator, box) -> np.ndarray:
    lo, hi = box
    return rng.uniform(lo, hi)


def _run_one(check_id: str, chart, point, settings: CheckSettings,
             rng: np.random.Generator) -> IdentityReport:
    report = run_check(check_id, chart, point, settings)
    tries = 0
    while (
        report.verdict == "Skipped"
        and report.reason
        and any(key in report.reason for key in _RESAMPLE_REASONS)
        and chart.sampling_box is not None
        and tries < _RESAMPLE_LIMIT
    ):
        point = _sample_point(rng, chart.sampling_box)
        report = run_check(check_id, chart, point, settings)
        tries += 1
    return report


def cmd_verify(args) -> int:
    check_ids: list[str] = []
    for pattern in args.checks.split(","):
        for cid in select_checks(pattern.strip()):
            if cid not in check_ids:
                check_ids.append(cid)
    chart = resolve_immersion(args.example)
    settings = CheckSettings(fd_step=args.fd_step, fd_order=args.fd_order,
                             seed=args.seed, grid_n=args.grid)
    rng = np.random.default_rng(args.seed)
    if chart.sampling_box is None:
        raise ConfigError(f"immersion {chart.name!r} has no sampling box")
    points = [_sample_point(rng, chart.sampling_box) for _ in range(args.points)]

    tasks = []
    for cid in check_ids:
        spec = REGISTRY[cid]
        task_points = [None] if spec.kind == "quadrature" else points
        for k, p in enumerate(task_points):
            tasks.append((cid, k, p if p is not None else np.zeros(chart.domain_dim)))

    def run_task(task):
        cid, k, p = task
        local_rng = np.random.default_rng((args.seed, hash(cid) & 0xFFFF, k))
        report = _run_one(cid, chart, p, settings, local_rng)
        if args.tol is not None and report.verdict != "Skipped":
            rel = report.residual_rel
            report = replace(report, tolerance=args.tol,
                             verdict="Pass" if rel < args.tol else "Fail")
        return (check_ids.index(cid), k, report)

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(run_task, tasks))
    else:
        done = [run_task(t) for t in tasks]
    done.sort(key=lambda t: (t[0], t[1]))
    results = [r for _, _, r in done]

    meta = {
        "version": __version__,
        "example": args.example,
        "checks": check_ids,
        "seed": args.seed,
        "points": args.points,
        "fd": {"step": args.fd_step, "order": args.fd_order},
        "tolerance_override": args.tol,
        "grid": args.grid,
    }
    payload = report_payload(meta, results)
    text = render_report(payload, results, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 1 if payload["summary"]["fail"] else 0


def cmd_catalog(args) -> int:
    if args.what != "list":
        raise ConfigError("catalog supports only 'list'")
    lines = ["immersions:"]
    lines += [f"  {cid}" for cid in catalog_ids()]
    lines.append("targets:")
    lines += [f"  {tid}" for tid in _TARGET_IDS]
    lines.append("checks:")
    lines += [f"  {cid}: {REGISTRY[cid].statement}" for cid in REGISTRY]
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_angles(args) -> int:
    chart = resolve_immersion(args.example)
    try:
        point = np.array([float(x) for x in args.at.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad point {args.at!r}") from exc
    if point.shape != (chart.domain_dim,):
        raise ConfigError(
            f"point has {point.shape[0]} coordinates, immersion domain has {chart.domain_dim}"
        )
    ad = angle_data(chart, point)
    out = {
        "example": args.example,
        "point": [float(x) for x in point],
        "cos_spectrum": [float(c) for c in ad.cos_spectrum],
        "kappa": ad.kappa,
        "kappa_determinant_route": ad.kappa_from_determinants,
        "classification": str(ad.classification),
        "rank": ad.polar.rank,
        "pullback_form": [[float(v) for v in row] for row in ad.pullback_2form],
        "induced_metric": [[float(v) for v in row] for row in ad.point.g_M.components],
    }
    sys.stdout.write(render_json(out))
    return 0


def cmd_flow(args) -> int:
    spec = args.example
    if "?" not in spec and (args.eps is not None or args.winding is not None):
        eps = 0.1 if args.eps is None else args.eps
        winding = args.winding or "lagrangian"
        spec = f"{spec}?eps={eps}&winding={winding}"
    chart = resolve_immersion(spec)
    disc = discretize(chart, (args.grid, args.grid))
    trace = run_flow(disc, step_size=args.step_size, max_steps=args.steps,
                     stop_grad_norm=args.stop_grad)
    rows = trace.rows()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(render_flow_csv(rows))
    summary = dichotomy_report(trace)
    summary["example"] = spec
    summary["grid"] = args.grid
    sys.stdout.write(render_json(summary))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kalab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_cat = sub.add_parser("catalog", help="list catalog immersions, targets and checks")
    p_cat.add_argument("what", choices=["list"])
    p_cat.set_defaults(func=cmd_catalog)

    p_ver = sub.add_parser("verify", help="run identity checks at sampled points")
    p_ver.add_argument("--checks", required=True, help="comma-separated globs over check ids")
    p_ver.add_argument("--example", required=True, help="immersion id with optional ?params")
    p_ver.add_argument("--points", type=int, default=3)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--tol", type=float, default=None, help="override every tolerance")
    p_ver.add_argument("--fd-step", type=float, default=1e-3)
    p_ver.add_argument("--fd-order", type=int, choices=[2, 4], default=4)
    p_ver.add_argument("--grid", type=int, default=32, help="quadrature grid per axis")
    p_ver.add_argument("--out", default=None)
    p_ver.add_argument("--format", choices=["json", "csv", "table"], default="json")
    p_ver.set_defaults(func=cmd_verify)

    p_ang = sub.add_parser("angles", help="angle data of one immersion at one point")
    p_ang.add_argument("--example", required=True)
    p_ang.add_argument("--at", required=True, help="comma-separated domain coordinates")
    p_ang.set_defaults(func=cmd_angles)

    p_flow = sub.add_parser("flow", help="discrete volume-descent flow on a periodic immersion")
    p_flow.add_argument("--example", default="torus-graph")
    p_flow.add_argument("--eps", type=float, default=None)
    p_flow.add_argument("--winding", choices=["lagrangian", "tilted", "holomorphic"], default=None)
    p_flow.add_argument("--grid", type=int, default=32)
    p_flow.add_argument("--steps", type=int, default=4000)
    p_flow.add_argument("--step-size", type=float, default=None)
    p_flow.add_argument("--stop-grad", type=float, default=1e-8)
    p_flow.add_argument("--out", default=None)
    p_flow.set_defaults(func=cmd_flow)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
