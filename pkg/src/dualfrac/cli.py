"""Command-line experiment harness with machine-readable JSON/CSV reports.

Exit codes: 0 when every assertion in the run passes, 1 on an assertion or
runtime failure, 2 on a usage error.  Reports are deterministic under a
fixed seed except for the wall-clock field.  The environment variable
``FRAC_THREADS`` caps the worker count used for independent sub-runs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bounds import build_bounds_context, c2_ball_norm, embedding_constant
from .fieldio import write_snapshot
from .fixed_point import (
    continuity_experiment,
    measure_contraction,
    solve_fixed_point,
)
from .grid import Grid3
from .poisson import (
    box_length_sweep,
    fit_growth_exponent,
    regularity_check,
    solvability_report,
    solve_linear_system,
)
from .problems import (
    ConfigError,
    continuity_pairs,
    demo_config_text,
    load_problem,
    solvability_sweep_cases,
)
from .spectral import field_norms, forward_transform, vector_norms

__all__ = ["run_command", "write_report", "main"]

SUBCOMMANDS = (
    "solve-linear",
    "solve",
    "verify-bounds",
    "contraction",
    "sweep-epsilon",
    "continuity",
    "solvability",
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class Check:
    """One asserted inequality with both sides materialized."""

    name: str
    lhs: float
    op: str
    rhs: float

    @property
    def passed(self) -> bool:
        if self.op == "<=":
            return self.lhs <= self.rhs
        if self.op == "<":
            return self.lhs < self.rhs
        if self.op == ">":
            return self.lhs > self.rhs
        if self.op == "==":
            return self.lhs == self.rhs
        raise ValueError(f"unknown comparison {self.op!r}")

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "op": self.op,
            "rhs": self.rhs,
            "passed": self.passed,
        }


def _format_float(x: float) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x}")
    return format(x, ".17g")


def _dump_json(obj, indent: int = 0) -> str:
    """Serialize with floats at 17 significant digits, deterministically."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(obj)
    if isinstance(obj, str):
        import json as _json

        return _json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{_dump_json(str(k))}: {_dump_json(v, indent + 1)}" for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{inner}{_dump_json(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def write_report(report: dict, out_dir, series: list[dict] | None = None) -> list[Path]:
    """Write report.json (and series.csv for sweeps) into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    report_path = out / "report.json"
    report_path.write_text(_dump_json(report) + "\n")
    paths.append(report_path)
    if series is not None:
        series_path = out / "series.csv"
        with series_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            header = list(series[0].keys()) if series else []
            writer.writerow(header)
            for row in series:
                writer.writerow(
                    [
                        _format_float(v) if isinstance(v, (float, np.floating)) else v
                        for v in row.values()
                    ]
                )
        paths.append(series_path)
    return paths


def _worker_count() -> int:
    raw = os.environ.get("FRAC_THREADS", "").strip()
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def _parallel_map(fn, items):
    items = list(items)
    workers = min(_worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- subcommand handlers ------------------------------------------------------


def _forward_residual(u, f, s1, s2) -> float:
    """Relative defect || op(u) - f ||_L2 / ||f||_L2 on the nonzero modes."""
    grid = u.grid
    pm = grid.wavenumbers
    lhs = (pm ** (2.0 * s1) + pm ** (2.0 * s2)) * forward_transform(u).coefficients
    rhs = forward_transform(f).coefficients.copy()
    lhs[0, 0, 0] = 0.0
    rhs[0, 0, 0] = 0.0
    num = float(np.sqrt(grid.mode_volume * np.sum(np.abs(lhs - rhs) ** 2)))
    den = float(np.sqrt(grid.mode_volume * np.sum(np.abs(rhs) ** 2)))
    return num / den if den else num


def _cmd_solve_linear(problem, args, dump):
    u0 = solve_linear_system(problem)
    influxes = problem.influx_fields()
    components = []
    checks = []
    for m in range(problem.n_components):
        s1, s2 = problem.orders.s1[m], problem.orders.s2[m]
        f = influxes[m]
        forward_residual = _forward_residual(u0.components[m], f, s1, s2)
        reg_residual = regularity_check(u0.components[m], f, s1, s2)
        report = solvability_report(f, s1)
        components.append(
            {
                "norms": field_norms(u0.components[m]).as_dict(),
                "forward_residual": forward_residual,
                "regularity_residual": reg_residual,
                "solvability": report.as_dict(),
            }
        )
        checks.append(Check(f"forward_residual_{m}", forward_residual, "<=", 1e-12))
        checks.append(Check(f"regularity_residual_{m}", reg_residual, "<=", 1e-10))
    results = {
        "components": components,
        "u0_norms": vector_norms(u0).as_dict(),
    }
    if dump:
        for m, comp in enumerate(u0.components):
            dump(f"u0_{m}.fsf", comp, m)
    return results, checks, None, None


def _cmd_solve(problem, args, dump):
    result = solve_fixed_point(
        problem, rho=problem.rho, tol=args.tol, max_iter=args.max_iter
    )
    up_h2 = vector_norms(result.u_p).h2
    results = {
        "iterations": result.iterations,
        "step_norms": list(result.step_norms),
        "contraction_estimates": list(result.contraction_estimates),
        "final_residual": result.final_residual,
        "converged": result.converged,
        "u0_norms": vector_norms(result.u0).as_dict(),
        "u_p_norms": vector_norms(result.u_p).as_dict(),
        "u_norms": vector_norms(result.u).as_dict(),
    }
    checks = [
        Check("converged", 1.0 if result.converged else 0.0, "==", 1.0),
        Check("final_residual", result.final_residual, "<=", 1e-8),
        Check("u_p_inside_ball", up_h2, "<=", problem.rho),
    ]
    if dump:
        for m in range(problem.n_components):
            dump(f"u0_{m}.fsf", result.u0.components[m], m)
            dump(f"u_p_{m}.fsf", result.u_p.components[m], m)
            dump(f"u_{m}.fsf", result.u.components[m], m)
    return results, checks, None, result.bounds


def _cmd_verify_bounds(problem, args, dump):
    u0 = solve_linear_system(problem)
    ctx = build_bounds_context(problem, u0, rho=problem.rho)
    lhs = ctx.epsilon_max * ctx.sigma
    rhs = ctx.rho / (ctx.u0_h2 + 1.0)
    results = {
        "duality_product": lhs,
        "duality_target": rhs,
        "duality_error": abs(lhs - rhs),
    }
    checks = [
        Check("duality_identity", abs(lhs - rhs), "<=", 1e-12 * rhs),
        Check("kernel_l1_positive", ctx.H, ">", 0.0),
        Check("kernel_filtered_positive", ctx.Q, ">", 0.0),
    ]
    return results, checks, None, ctx


def _cmd_contraction(problem, args, dump):
    u0 = solve_linear_system(problem)
    ctx = build_bounds_context(problem, u0, rho=problem.rho)
    ratios = measure_contraction(problem, u0, problem.rho, args.trials, args.seed)
    results = {"ratios": ratios, "max_ratio": max(ratios)}
    checks = [
        Check("max_ratio_below_certified", max(ratios), "<=", ctx.epsilon * ctx.sigma),
        Check("max_ratio_strict", max(ratios), "<", 1.0),
    ]
    return results, checks, None, ctx


def _cmd_sweep_epsilon(problem, args, dump):
    u0 = solve_linear_system(problem)
    ctx = build_bounds_context(problem, u0, rho=problem.rho)
    eps_values = [ctx.epsilon_max * f for f in (0.125, 0.25, 0.5, 1.0)]

    def solve_at(eps):
        res = solve_fixed_point(
            problem.with_epsilon(eps), rho=problem.rho, tol=args.tol, max_iter=args.max_iter
        )
        return vector_norms(res.u_p).h2

    norms = _parallel_map(solve_at, eps_values)
    slope = float(np.polyfit(np.log(eps_values), np.log(norms), 1)[0])
    series = [
        {"epsilon": e, "up_h2_norm": n} for e, n in zip(eps_values, norms)
    ]
    results = {"epsilon": eps_values, "up_h2_norm": norms, "slope": slope}
    checks = [Check("scaling_slope", abs(slope - 1.0), "<=", 0.05)]
    return results, checks, series, ctx


def _cmd_continuity(problem, args, dump):
    u0 = solve_linear_system(problem)
    i_radius = embedding_constant() * (vector_norms(u0).h2 + 1.0)
    pairs = continuity_pairs(problem.nonlinearity)
    entries = []
    checks = []
    for label, g1, g2 in pairs:
        m_shared = max(c2_ball_norm(g1, i_radius), c2_ball_norm(g2, i_radius))
        ctx = build_bounds_context(problem, u0, rho=problem.rho, M=m_shared)
        eps = 0.9 * ctx.epsilon_max
        lhs, rhs = continuity_experiment(
            problem.with_epsilon(eps), g1, g2, rho=problem.rho, max_iter=args.max_iter
        )
        entries.append({"pair": label, "epsilon": eps, "lhs": lhs, "rhs": rhs})
        checks.append(Check(f"continuity_{label}", lhs, "<=", rhs))
    return {"pairs": entries}, checks, None, None


def _cmd_solvability(problem, args, dump):
    spacing = problem.grid.spacing
    base_l = problem.grid.box_length
    boxes = [base_l / 2.0, base_l, base_l * 2.0]
    cases_out = []
    checks = []
    series = []
    for case in solvability_sweep_cases():
        points = box_length_sweep(case.realize, case.s1, case.s2, spacing, boxes)
        base_report = solvability_report(case.realize(problem.grid), case.s1)
        entry = {
            "case": case.label,
            "s1": case.s1,
            "s2": case.s2,
            "points": [p.as_dict() for p in points],
            "solvability": base_report.as_dict(),
        }
        for p in points:
            series.append({"case": case.label, "box_length": p.box_length, "u_l2_sq": p.u_l2_sq})
        if case.expected_growth > 0.0:
            slope = fit_growth_exponent(points)
            entry["fitted_growth"] = slope
            entry["expected_growth"] = case.expected_growth
            checks.append(
                Check(
                    f"growth_{case.label}",
                    abs(slope - case.expected_growth),
                    "<=",
                    0.25 * case.expected_growth,
                )
            )
        else:
            for i in range(len(points) - 1):
                change = abs(points[i + 1].u_l2_sq - points[i].u_l2_sq) / points[i].u_l2_sq
                entry[f"change_doubling_{i}"] = change
                checks.append(Check(f"bounded_{case.label}_{i}", change, "<=", 0.05))
        cases_out.append(entry)
    return {"cases": cases_out}, checks, series, None


_HANDLERS = {
    "solve-linear": _cmd_solve_linear,
    "solve": _cmd_solve,
    "verify-bounds": _cmd_verify_bounds,
    "contraction": _cmd_contraction,
    "sweep-epsilon": _cmd_sweep_epsilon,
    "continuity": _cmd_continuity,
    "solvability": _cmd_solvability,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualfrac",
        description="Spectral solver and verification harness for two-exponent fractional systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="problem JSON path, or 'demo' for the bundled problem")
        p.add_argument("--out", default="reports", help="output directory (default: reports)")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized experiments")
        p.add_argument("--tol", type=float, default=1e-10, help="fixed-point step tolerance")
        p.add_argument("--max-iter", type=int, default=200, help="fixed-point iteration cap")
        p.add_argument("--dump-fields", action="store_true", help="write field snapshots next to the report")
        p.add_argument("--grid", type=int, default=None, help="override points per axis")
        p.add_argument("--box", type=float, default=None, help="override box length")
        if name == "contraction":
            p.add_argument("--trials", type=int, default=20, help="number of random pairs")
    return parser


def _load_config(args) -> tuple[str, object]:
    if args.config == "demo":
        text = demo_config_text()
    else:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError("--config", f"no such file: {path}")
        text = path.read_text()
    problem = load_problem(text)
    if args.grid is not None or args.box is not None:
        grid = Grid3(
            args.box if args.box is not None else problem.grid.box_length,
            args.grid if args.grid is not None else problem.grid.points_per_axis,
        )
        problem = problem.with_grid(grid)
    return text, problem


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        config_text, problem = _load_config(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out_dir = Path(args.out)
    dump_fn = None
    if args.dump_fields:
        out_dir.mkdir(parents=True, exist_ok=True)

        def dump_fn(name, field, component):
            write_snapshot(field, component, out_dir / name)

    start = time.perf_counter()
    try:
        results, checks, series, bounds = _HANDLERS[args.command](problem, args, dump_fn)
    except Exception as exc:  # runtime failure: report and exit 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    elapsed = time.perf_counter() - start

    report = {
        "command": args.command,
        "problem_digest": hashlib.sha256(config_text.encode()).hexdigest(),
        "args": {
            "seed": args.seed,
            "tol": args.tol,
            "max_iter": args.max_iter,
            "grid": problem.grid.points_per_axis,
            "box": problem.grid.box_length,
        },
        "bounds": bounds.as_dict() if bounds is not None else None,
        "results": results,
        "checks": [c.as_dict() for c in checks],
        "passed": all(c.passed for c in checks),
        "wall_clock_seconds": elapsed,
    }
    try:
        paths = write_report(report, out_dir, series)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: {check.lhs:.6e} {check.op} {check.rhs:.6e}")
    print(f"report: {paths[0]}")
    return EXIT_OK if report["passed"] else EXIT_FAILURE


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
