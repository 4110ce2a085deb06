"""Command-line entry point.

Five subcommands, one JSON config each:

  validate           check altering-distance properties on a grid
  solve-abstract     run the pair iteration on a scalar linear problem
  solve-bvp          solve a periodic boundary value problem
  verify-conditions  audit growth bounds and the contraction number
  verify-oracle      cross-check a solve against the shooting reference

Every run writes report.json and trace.csv into --out (and PNG figures
unless --no-figures).  report.json is deterministic for a fixed config and
seed, except for its "timing" key; files are written atomically so a
killed run never leaves a torn report.  Exit codes: 0 success, 2 the run
worked but found violations or a mismatch, 1 errors and failed runs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from typing import Optional

import numpy as np

from .bvp import (
    BvpSpec,
    GridFunction,
    NonCollapseError,
    check_growth_conditions,
    make_rhs,
    solve_bvp,
)
from .coupled_core import CoupledProblem
from .figures import (
    save_altering_figure,
    save_margin_figure,
    save_solution_figure,
    save_trace_figure,
)
from .iteration import TRACE_HEADER, init_iteration, run, write_trace_csv
from .oracle import solve_periodic_ode
from .order_metric import (
    BUILTIN_ALTERING,
    Violation,
    oscillation_defect,
    real_line_space,
    validate_altering_distance,
)

MAX_REPORTED_VIOLATIONS = 500


class ConfigError(ValueError):
    """The config file is missing or malformed."""


def _load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return data


def _need(config: dict, key: str):
    if key not in config:
        raise ConfigError(f"config needs a {key!r} entry")
    return config[key]


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _jsonable(obj):
    """Coerce payload values to plain JSON types; non-finite floats become
    strings so the report stays loadable by strict parsers."""
    if isinstance(obj, Violation):
        return {
            "prop": obj.prop,
            "witness": _jsonable(obj.witness),
            "margin": _jsonable(obj.margin),
        }
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, GridFunction):
        return [_jsonable(v) for v in obj.values.tolist()]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    return str(obj)


def _write_report(out_dir: str, payload: dict, elapsed: float) -> None:
    payload = dict(payload)
    payload["timing"] = {"seconds": elapsed}
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    _write_atomic(os.path.join(out_dir, "report.json"), text)


def _violation_entries(violations) -> dict:
    listed = [_jsonable(v) for v in violations[:MAX_REPORTED_VIOLATIONS]]
    return {"violations": listed, "violation_count": len(violations)}


def _empty_trace(out_dir: str) -> None:
    _write_atomic(os.path.join(out_dir, "trace.csv"), TRACE_HEADER + "\n")


def _bracket_value(config: dict, key: str, spec: BvpSpec):
    value = _need(config, key)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, list):
        if len(value) != spec.N + 1:
            raise ConfigError(
                f"{key!r} as a list must have N+1 = {spec.N + 1} entries, "
                f"got {len(value)}"
            )
        return np.asarray(value, dtype=float)
    raise ConfigError(f"{key!r} must be a number or a list of node values")


def _spec_from_config(config: dict) -> BvpSpec:
    try:
        T = float(_need(config, "T"))
        lambda1 = float(_need(config, "lambda1"))
        lambda2 = float(_need(config, "lambda2"))
        mu1 = float(config.get("mu1", 0.0))
        mu2 = float(config.get("mu2", 0.0))
        N = int(config.get("N", 200))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad spec numbers: {exc}") from exc
    f = make_rhs(_need(config, "f"))
    h = make_rhs(_need(config, "h"))
    return BvpSpec(T=T, lambda1=lambda1, lambda2=lambda2, mu1=mu1, mu2=mu2,
                   f=f, h=h, N=N)


def _iteration_exit(status: str) -> int:
    # chain_violation and max_iter are both failed runs, not verifier hits
    return 0 if status == "converged" else 1


def _residuals_entry(result) -> dict:
    r = result.residuals
    return {"Gx": r[0], "Sx": r[1], "Gy": r[2], "Sy": r[3]}


def _chain_event_entries(result) -> list:
    return [
        {"step": n, "condition": label, "defect": defect}
        for n, label, defect in result.chain_events
    ]


def _mode_validate(config: dict, seed: int, out_dir: str, figures: bool):
    names = config.get("functions", ["square", "square_minus_log"])
    if not isinstance(names, list) or not names:
        raise ConfigError("'functions' must be a non-empty list of names")
    grid_cfg = config.get("grid", {})
    if not isinstance(grid_cfg, dict):
        raise ConfigError("'grid' must be a mapping with 'max' and 'points'")
    t_max = float(grid_cfg.get("max", 3.0))
    points = int(grid_cfg.get("points", 200))
    grid = np.linspace(0.0, t_max, points)

    chosen = {}
    for name in names:
        if name not in BUILTIN_ALTERING:
            raise ConfigError(
                f"unknown altering distance {name!r}; "
                f"known: {sorted(BUILTIN_ALTERING)}"
            )
        chosen[name] = BUILTIN_ALTERING[name]

    results = {}
    all_passed = True
    for name, fn in chosen.items():
        report = validate_altering_distance(fn, grid)
        entry = {
            "passed": report.passed,
            "checked": report.checked,
            "oscillation_defect": oscillation_defect(fn, 0.0, t_max),
        }
        entry.update(_violation_entries(report.violations))
        results[name] = entry
        all_passed = all_passed and report.passed

    _empty_trace(out_dir)
    if figures:
        save_altering_figure(chosen, os.path.join(out_dir, "altering.png"),
                             t_max=t_max)

    payload = {
        "mode": "validate",
        "status": "ok" if all_passed else "violations",
        "grid": {"max": t_max, "points": points},
        "functions": results,
    }
    return payload, (0 if all_passed else 2)


def _mode_solve_abstract(config: dict, seed: int, out_dir: str, figures: bool):
    prob = config.get("problem")
    if not isinstance(prob, dict):
        raise ConfigError("'problem' must be a mapping with fx, fy, const")
    fx = float(prob.get("fx", 0.0))
    fy = float(prob.get("fy", 0.0))
    const = float(prob.get("const", 0.0))
    g_scale = float(prob.get("g_scale", 1.0))
    s_scale = float(prob.get("s_scale", 1.0))
    if g_scale == 0.0 or s_scale == 0.0:
        raise ConfigError("g_scale and s_scale must be nonzero")
    start = _need(config, "start")
    if not isinstance(start, list) or len(start) != 4:
        raise ConfigError("'start' must be [x0, y0, x1, y1]")
    x0, y0, x1, y1 = (float(v) for v in start)
    tol = float(config.get("tol", 1e-10))
    max_iter = int(config.get("max_iter", 10_000))

    problem = CoupledProblem(
        space=real_line_space(),
        F=lambda x, y: fx * x + fy * y + const,
        G=lambda x: g_scale * x,
        S=lambda x: s_scale * x,
        G_preimage=lambda target: target / g_scale,
        S_preimage=lambda target: target / s_scale,
    )
    state = init_iteration(problem, x0, y0, x1, y1)
    result = run(problem, state, tol=tol, max_iter=max_iter)

    write_trace_csv(result, os.path.join(out_dir, "trace.csv"))
    if figures:
        save_trace_figure(result.trace, os.path.join(out_dir, "trace.png"))

    payload = {
        "mode": "solve-abstract",
        "status": result.status,
        "iterations": result.iterations,
        "alpha": result.alpha,
        "alpha_prime": result.alpha_prime,
        "residuals": _residuals_entry(result),
        "max_residual": result.max_residual,
        "final_M": result.trace[-1][1],
        "violations": _chain_event_entries(result),
        "note": result.note,
        "tol": tol,
        "trace": "trace.csv",
    }
    return payload, _iteration_exit(result.status)


def _mode_solve_bvp(config: dict, seed: int, out_dir: str, figures: bool):
    spec = _spec_from_config(config)
    alpha = _bracket_value(config, "alpha", spec)
    beta = _bracket_value(config, "beta", spec)
    tol = float(config.get("tol", 1e-12))
    max_iter = int(config.get("max_iter", 10_000))
    collapse_tol = config.get("collapse_tol")
    collapse_tol = None if collapse_tol is None else float(collapse_tol)

    solution = solve_bvp(spec, alpha, beta, tol=tol, max_iter=max_iter,
                         collapse_tol=collapse_tol)
    result = solution.result

    write_trace_csv(result, os.path.join(out_dir, "trace.csv"))
    if figures:
        save_trace_figure(result.trace, os.path.join(out_dir, "trace.png"))
        save_solution_figure(solution.u.nodes, solution.u.values,
                             os.path.join(out_dir, "solution.png"))

    payload = {
        "mode": "solve-bvp",
        "status": result.status,
        "iterations": result.iterations,
        "grid_panels": spec.N,
        "u": solution.u,
        "residuals": _residuals_entry(result),
        "max_residual": solution.max_residual,
        "ode_residual": solution.ode_defect,
        "periodicity_gap": solution.periodicity_gap,
        "collapse_gap": solution.collapse_gap,
        "contraction_number": spec.contraction_number,
        "violations": _chain_event_entries(result),
        "note": result.note,
        "tol": tol,
        "trace": "trace.csv",
    }
    return payload, _iteration_exit(result.status)


def _mode_verify_conditions(config: dict, seed: int, out_dir: str, figures: bool):
    spec = _spec_from_config(config)
    sample_count = int(config.get("sample_count", 2000))
    value_span = float(config.get("value_span", 5.0))
    tol = float(config.get("tol", 1e-10))

    report = check_growth_conditions(spec, sample_count=sample_count, seed=seed,
                                     value_span=value_span, tol=tol)

    _empty_trace(out_dir)
    if figures:
        seps, margins = [], []
        for v in report.violations:
            if v.prop != "contraction number":
                seps.append(v.witness[2] - v.witness[1])
                margins.append(v.margin)
        save_margin_figure(seps, margins, os.path.join(out_dir, "margins.png"))

    payload = {
        "mode": "verify-conditions",
        "status": "ok" if report.passed else "violations",
        "checked": report.checked,
        "sample_count": sample_count,
        "seed": seed,
        "contraction_number": spec.contraction_number,
    }
    payload.update(_violation_entries(report.violations))
    return payload, (0 if report.passed else 2)


def _mode_verify_oracle(config: dict, seed: int, out_dir: str, figures: bool):
    spec = _spec_from_config(config)
    alpha = _bracket_value(config, "alpha", spec)
    beta = _bracket_value(config, "beta", spec)
    tol = float(config.get("tol", 1e-12))
    max_iter = int(config.get("max_iter", 10_000))

    oracle_cfg = config.get("oracle", {})
    if not isinstance(oracle_cfg, dict):
        raise ConfigError("'oracle' must be a mapping")
    steps = int(oracle_cfg.get("steps", 8 * spec.N))
    if steps <= 0 or steps % spec.N != 0:
        raise ConfigError(
            f"oracle steps must be a positive multiple of N={spec.N}, got {steps}"
        )

    solution = solve_bvp(spec, alpha, beta, tol=tol, max_iter=max_iter)
    result = solution.result

    bracket = oracle_cfg.get("bracket")
    if bracket is None:
        # any interval containing the periodic initial value brackets it
        # for a contractive flow; the solve's bounds give one, padded
        lo = float(np.min(solution.u.values)) - 1.0
        hi = float(np.max(solution.u.values)) + 1.0
    else:
        if not isinstance(bracket, list) or len(bracket) != 2:
            raise ConfigError("'oracle.bracket' must be [lo, hi]")
        lo, hi = float(bracket[0]), float(bracket[1])

    def total_rhs(t, u):
        return float(spec.f(t, u)) + float(spec.h(t, u))

    orbit = solve_periodic_ode(total_rhs, spec.T, steps, (lo, hi),
                               tol=float(oracle_cfg.get("tol", 1e-12)))
    stride = steps // spec.N
    oracle_vals = orbit.values[::stride]
    disagreement = float(np.max(np.abs(solution.u.values - oracle_vals)))

    comparison_tol = config.get("comparison_tol")
    if comparison_tol is None:
        threshold = max(1e-5, 10.0 * (spec.T / spec.N) ** 2)
    else:
        threshold = float(comparison_tol)
    matched = result.status == "converged" and disagreement <= threshold

    write_trace_csv(result, os.path.join(out_dir, "trace.csv"))
    if figures:
        save_trace_figure(result.trace, os.path.join(out_dir, "trace.png"))
        save_solution_figure(solution.u.nodes, solution.u.values,
                             os.path.join(out_dir, "solution.png"),
                             oracle_nodes=orbit.times,
                             oracle_values=orbit.values)

    payload = {
        "mode": "verify-oracle",
        "status": "match" if matched else "mismatch",
        "solver_status": result.status,
        "iterations": result.iterations,
        "residuals": _residuals_entry(result),
        "oracle_u0": orbit.u0,
        "oracle_steps": steps,
        "oracle_bisection_steps": orbit.bisection_steps,
        "oracle_disagreement": disagreement,
        "comparison_tol": threshold,
        "max_residual": solution.max_residual,
        "periodicity_gap": solution.periodicity_gap,
        "violations": [],
        "trace": "trace.csv",
    }
    return payload, (0 if matched else 2)


_MODES = {
    "validate": _mode_validate,
    "solve-abstract": _mode_solve_abstract,
    "solve-bvp": _mode_solve_bvp,
    "verify-conditions": _mode_verify_conditions,
    "verify-oracle": _mode_verify_oracle,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coupled-point",
        description=(
            "Coupled coincidence-point toolkit: validate gauge functions, "
            "run the pair iteration, and solve periodic boundary value "
            "problems."
        ),
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for name, help_text in (
        ("validate", "check altering-distance properties on a grid"),
        ("solve-abstract", "run the pair iteration on a scalar linear problem"),
        ("solve-bvp", "solve a periodic boundary value problem"),
        ("verify-conditions", "audit growth bounds and the contraction number"),
        ("verify-oracle", "cross-check a solve against the shooting reference"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=None,
                       help="sampling seed (default: config 'seed', then 0)")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")
    return parser


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    started = time.monotonic()
    try:
        config = _load_config(args.config)
        seed = args.seed if args.seed is not None else int(config.get("seed", 0))
        payload, code = _MODES[args.mode](config, seed, out_dir, not args.no_figures)
    except NonCollapseError as exc:
        payload = {
            "mode": args.mode,
            "status": "non_collapse",
            "error": str(exc),
            "collapse_gap": exc.gap,
        }
        code = 1
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        payload = {"mode": args.mode, "status": "error", "error": str(exc)}
        code = 1
    _write_report(out_dir, payload, time.monotonic() - started)
    return code


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
