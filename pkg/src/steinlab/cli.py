"""Command-line interface: every experiment as a subcommand, CSV/JSON out.

Exit codes: 0 success, 2 configuration/validation error, 3 a mathematical
acceptance property was violated by the computed results (for example a
modulus bound breached beyond quadrature slack, or a bound-dominance failure
in the CLT table). Code 3 lets CI distinguish "the math failed" from
operational errors.

Outputs are byte-identical for identical (config, seed), regardless of the
worker thread count (STEINLAB_THREADS).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict

import numpy as np

from . import __version__
from .clt import CltExperiment, builtin_source, run_experiment, source_names
from .constants import BOUND_KINDS, berry_esseen_bound, c1, c2, cor_constant, higher_order_constant
from .gaussian import RngStream
from .regularity import (
    PairPlan,
    probe_hessian_modulus,
    raic_asymptotic_ratio,
    raic_cross_partial_gap,
)
from .stein import SteinSolution
from .targets import builtin, registry_names
from .transport import EmpiricalSample, w1_exact

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROPERTY = 3


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, np.ndarray):
        return ";".join(format(float(x), ".17g") for x in v)
    return str(v)


def _write_rows(path: str, fieldnames: list[str], rows: list[dict], fmt: str, config: dict, t0: float):
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row.get(k)) for k in fieldnames])
        payload = buf.getvalue()
    else:
        doc = {
            "config": config,
            "rows": [{k: (row.get(k).tolist() if isinstance(row.get(k), np.ndarray) else row.get(k)) for k in fieldnames} for row in rows],
            "meta": {"version": __version__, "wall_time_s": time.time() - t0},
        }
        payload = json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n"
    if path == "-":
        sys.stdout.write(payload)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(payload)


def _parse_grid(text: str) -> list[int]:
    """'1..8' or '1,2,4,8' -> list of ints."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok]


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok]


def _parse_points(text: str, d: int) -> np.ndarray:
    pts = []
    for chunk in text.split(";"):
        vals = [float(tok) for tok in chunk.split(",") if tok]
        if len(vals) != d:
            raise ValueError(f"point {chunk!r} has {len(vals)} coordinates, expected {d}")
        pts.append(vals)
    return np.asarray(pts, dtype=float)


def _target_from_args(args) -> "SteinSolution":
    params = json.loads(args.params) if args.params else {}
    h = builtin(args.target, args.d, **params)
    return SteinSolution(h)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_constants(args, t0) -> int:
    rows = []
    for d in _parse_grid(args.d):
        row = {
            "kind": args.kind or "",
            "alpha": args.alpha,
            "delta": args.delta,
            "d": d,
            "n": args.n,
            "c1": c1(args.alpha, d),
            "c2": c2(args.alpha, d),
            "cor_constant": cor_constant(d),
            "a_const": higher_order_constant(args.alpha, d),
            "bound": None,
        }
        if args.kind:
            if args.n is None:
                raise ValueError("--n is required when --kind is given")
            report = berry_esseen_bound(
                args.kind, d=d, n=args.n, alpha=args.alpha, delta=args.delta,
                moment_high=args.moment_high, moment_low=args.moment_low,
            )
            row["bound"] = report.bound_value
            if report.domain_note:
                print(f"note: d={d}: {report.domain_note}", file=sys.stderr)
        rows.append(row)
    fields = ["kind", "alpha", "delta", "d", "n", "c1", "c2", "cor_constant", "a_const", "bound"]
    _write_rows(args.out, fields, rows, args.format, vars(args) | {"command": "constants"}, t0)
    print(f"constants: wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_solve(args, t0) -> int:
    sol = _target_from_args(args)
    pts = _parse_points(args.at, args.d)
    rows = []
    for p in pts:
        row = {"x": p, "f": sol.eval_f(p)}
        if args.derivatives:
            row["gradient"] = sol.eval_gradient(p)
            row["laplacian"] = sol.eval_laplacian(p)
            row["hessian"] = sol.eval_hessian(p).ravel()
        rows.append(row)
    fields = ["x", "f"] + (["gradient", "laplacian", "hessian"] if args.derivatives else [])
    _write_rows(args.out, fields, rows, args.format, vars(args) | {"command": "solve"}, t0)
    print(f"solve: evaluated {len(rows)} points of f for target {args.target!r}")
    return EXIT_OK


def _cmd_residual(args, t0) -> int:
    sol = _target_from_args(args)
    rng = RngStream(args.seed, 0).generator()
    pts = rng.standard_normal((args.points, args.d))
    res = sol.residual(pts)
    rows = [{"x": pts[i], "residual": res[i]} for i in range(len(res))]
    worst = float(np.max(np.abs(res)))
    _write_rows(args.out, ["x", "residual"], rows, args.format, vars(args) | {"command": "residual"}, t0)
    print(f"residual: max |Delta f - x.grad f - hbar| = {worst:.3e} over {args.points} points")
    if args.fail_above is not None and worst > args.fail_above:
        print(f"residual exceeds threshold {args.fail_above}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


def _cmd_holder_probe(args, t0) -> int:
    params = json.loads(args.params) if args.params else {}
    h = builtin(args.target, args.d, **params)
    sol = SteinSolution(h)
    plan = PairPlan(count=args.pairs)
    samples = probe_hessian_modulus(sol, plan, RngStream(args.seed, 0), beta=args.beta)
    rows = []
    for s in samples:
        for quantity, mod, bounds, flags in (
            ("hessian", s.hess_opnorm_diff, s.bound_hess, s.hess_violations),
            ("laplacian", s.lap_diff, s.bound_lap, s.lap_violations),
        ):
            for kind, bound in bounds.items():
                rows.append(
                    {
                        "quantity": quantity, "bound_kind": kind, "x": s.x, "y": s.y,
                        "dist": s.dist, "modulus": mod, "bound": bound,
                        "margin": bound - mod, "slack": s.slack, "violated": flags[kind],
                    }
                )
    fields = ["quantity", "bound_kind", "x", "y", "dist", "modulus", "bound", "margin", "slack", "violated"]
    _write_rows(args.out, fields, rows, args.format, vars(args) | {"command": "holder-probe"}, t0)
    n_viol = sum(1 for r in rows if r["violated"])
    print(f"holder-probe: {len(samples)} pairs, {n_viol} violations beyond slack")
    return EXIT_PROPERTY if n_viol else EXIT_OK


def _cmd_raic(args, t0) -> int:
    grid = _parse_floats(args.u_grid)
    points = raic_asymptotic_ratio(grid, quad_tol=args.quad_tol)
    rows = []
    for p in points:
        g = raic_cross_partial_gap(p.u, quad_tol=args.quad_tol)
        rows.append(
            {
                "u": p.u, "first_integral": g.first_integral,
                "second_integral": g.second_integral, "gap": g.gap, "ratio": p.ratio,
            }
        )
    fields = ["u", "first_integral", "second_integral", "gap", "ratio"]
    _write_rows(args.out, fields, rows, args.format, vars(args) | {"command": "raic"}, t0)
    devs = [abs(p.ratio - 1.0) for p in sorted(points, key=lambda q: -q.u)]
    trending = all(b <= a + 1e-12 for a, b in zip(devs, devs[1:]))
    print(f"raic: ratios {[round(p.ratio, 4) for p in points]}, |ratio-1| decreasing: {trending}")
    return EXIT_OK if trending else EXIT_PROPERTY


def _cmd_w1(args, t0) -> int:
    a = EmpiricalSample(np.loadtxt(args.a, delimiter=",", ndmin=2))
    b = EmpiricalSample(np.loadtxt(args.b, delimiter=",", ndmin=2))
    value = w1_exact(a, b)
    rows = [{"m": a.m, "d": a.d, "w1": value}]
    _write_rows(args.out, ["m", "d", "w1"], rows, args.format, vars(args) | {"command": "w1"}, t0)
    print(f"w1: exact distance = {value:.12g}")
    return EXIT_OK


_CLT_SCHEMA = {
    "source": str, "dim": int, "n_grid": list, "m": int, "replications": int,
    "bound_kind": str, "alpha": (int, float), "delta": (int, float, type(None)),
    "seed": int, "source_params": dict,
}


def _load_clt_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("$: config must be a JSON object")
    for key, value in cfg.items():
        if key not in _CLT_SCHEMA:
            raise ValueError(f"$.{key}: unknown field")
        if not isinstance(value, _CLT_SCHEMA[key]):
            raise ValueError(f"$.{key}: expected {_CLT_SCHEMA[key]}, got {type(value).__name__}")
    return cfg


def _cmd_clt(args, t0) -> int:
    if args.config:
        cfg = _load_clt_config(args.config)
    else:
        cfg = {}
    if args.source:
        cfg["source"] = args.source
    if args.d is not None:
        cfg["dim"] = args.d
    if args.n_grid:
        cfg["n_grid"] = _parse_grid(args.n_grid)
    for key, val in (("m", args.m), ("replications", args.reps), ("bound_kind", args.bound),
                     ("alpha", args.alpha), ("delta", args.delta), ("seed", args.seed)):
        if val is not None:
            cfg[key] = val
    if args.a is not None:
        cfg.setdefault("source_params", {})["a"] = args.a
    try:
        experiment = CltExperiment(**cfg)
    except TypeError as exc:
        raise ValueError(f"clt config: {exc}") from None
    result = run_experiment(experiment)
    rows = [asdict(r) for r in result.rows]
    fields = ["source", "d", "n", "rep", "m", "w1_hat", "floor", "bound_kind", "delta", "bound_value", "satisfied"]
    _write_rows(args.out, fields, rows, args.format, cfg | {"command": "clt"}, t0)
    dominated = all(s.dominated for s in result.summaries)
    slope = "n/a" if result.slope is None else f"{result.slope:.3f}"
    slope_q = "n/a" if result.slope_quadrature is None else f"{result.slope_quadrature:.3f}"
    print(
        f"clt: {len(rows)} rows, bound dominated in mean-2SE: {dominated}, "
        f"log-log slope: {slope} (subtracted floor) / {slope_q} (quadrature floor)"
    )
    return EXIT_OK if dominated else EXIT_PROPERTY


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steinlab",
        description="Numerical laboratory for the Gaussian Stein equation: "
        "regularity of the heat-semigroup solution, explicit Berry-Esseen "
        "constants, and CLT rate experiments in exact 1-Wasserstein distance.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="-", help="output path ('-' for stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser(
        "constants",
        help="evaluate the explicit Hessian/Laplacian modulus constants "
        "C1(alpha,d), C2(alpha,d), their sum C(d), the higher-order constant A, "
        "and optionally a Berry-Esseen bound value",
    )
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--d", required=True, help="dimension grid, e.g. '1..8' or '1,2,4'")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--kind", choices=BOUND_KINDS, default=None)
    p.add_argument("--moment-high", type=float, default=None)
    p.add_argument("--moment-low", type=float, default=None)
    common(p)
    p.set_defaults(func=_cmd_constants)

    p = sub.add_parser(
        "solve",
        help="evaluate the heat-semigroup solution f_h (and derivatives) of "
        "Delta f - x.grad f = h - E h(Z) at given points",
    )
    p.add_argument("--target", required=True, choices=registry_names())
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--params", default=None, help="JSON parameters for the target family")
    p.add_argument("--at", required=True, help="points 'x1,x2;y1,y2;...'")
    p.add_argument("--derivatives", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser(
        "residual",
        help="sample the defect Delta f - x.grad f - (h - E h(Z)) of the "
        "computed solution at random points; exit 3 if above --fail-above",
    )
    p.add_argument("--target", required=True, choices=registry_names())
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--params", default=None)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--fail-above", type=float, default=None)
    common(p)
    p.set_defaults(func=_cmd_residual)

    p = sub.add_parser(
        "holder-probe",
        help="check the (1+log) alpha-Holder modulus bounds of the Hessian "
        "(operator norm, constant C1) and Laplacian (constant C2) of f_h over "
        "sampled point pairs; exit 3 on any violation beyond quadrature slack",
    )
    p.add_argument("--target", required=True, choices=registry_names())
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--params", default=None)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument("--beta", type=float, default=None, help="exponent for the beta-Holder bound (default alpha/2)")
    common(p)
    p.set_defaults(func=_cmd_holder_probe)

    p = sub.add_parser(
        "raic",
        help="reduced-integral evaluation of the cross-partial gap of the "
        "max(0,min(x,y)) example: gap(u) ~ u log u / (2 pi), the sharpness "
        "witness for the log factor in the Hessian modulus; exit 3 if "
        "|ratio-1| fails to decrease along the grid",
    )
    p.add_argument("--u-grid", required=True, help="comma-separated decreasing u values")
    p.add_argument("--quad-tol", type=float, default=1e-12)
    common(p)
    p.set_defaults(func=_cmd_raic)

    p = sub.add_parser(
        "w1",
        help="exact 1-Wasserstein distance between two equal-size empirical "
        "measures (min-cost matching), read from CSV point files",
    )
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    common(p)
    p.set_defaults(func=_cmd_w1)

    p = sub.add_parser(
        "clt",
        help="simulate W = n^{-1/2} sum X_i for an isotropic source, measure "
        "exact W1 against Gaussian samples, and compare with the explicit "
        "Berry-Esseen bounds (n^{-delta/2} under 2+delta moments, log n/sqrt n "
        "under third moments); exit 3 if a bound fails to dominate",
    )
    p.add_argument("--config", default=None, help="JSON experiment config")
    p.add_argument("--source", choices=source_names(), default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--n-grid", default=None, help="e.g. '4,16,64,256'")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--bound", choices=BOUND_KINDS, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--a", type=float, default=None, help="tail index for pareto_tail")
    common(p)
    p.set_defaults(func=_cmd_clt)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.time()
    try:
        return args.func(args, t0)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
