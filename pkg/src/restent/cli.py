"""Command-line front end.

Subcommands:
  run       execute a configured optimization run, writing iterations.csv,
            best_metric.json, summary.json and convergence.svg
  evaluate  re-evaluate a stored metric file on a grid
  bounds    print the closed-form reference values of a built-in system

Exit codes: 0 success, 2 configuration/usage error, 3 numerical abort
(partial outputs are written where possible).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .objective import ConformalMetric, GridWorkspace
from .optimizer import IterationError, RunResult, StepRule, run
from .poly import ORDERING_TAG, PolyBasis, PolyCoeffs
from .systems import Cylinder, SystemCase, available_systems, get_case


class ConfigError(ValueError):
    """Invalid configuration or usage."""


# ---------------------------------------------------------------------------
# config handling

def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a JSON object")
    return data


def _get_case(config: dict) -> SystemCase:
    name = config.get("system")
    if not name:
        raise ConfigError(
            f"config must name a system; available: {available_systems()}")
    params = config.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object of numbers")
    try:
        return get_case(name, **params)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _resolve_run_config(config: dict) -> tuple[SystemCase, dict]:
    """Fill defaults from the case and validate everything up front."""
    case = _get_case(config)
    defaults = case.defaults
    degree = int(config.get("degree",
                            defaults.degree if defaults else 0))
    include_constant = bool(config.get("include_constant", False))
    counts = tuple(int(c) for c in config.get(
        "counts", defaults.counts if defaults else ()))
    if len(counts) != len(case.domain.axes):
        raise ConfigError(
            f"counts must have {len(case.domain.axes)} entries, got "
            f"{list(counts)}")
    if any(c < 2 for c in counts):
        raise ConfigError("all grid counts must be >= 2")
    if degree < 0:
        raise ConfigError("degree must be nonnegative")
    if degree > 0 and isinstance(case.domain, Cylinder):
        raise ConfigError(
            "non-constant polynomial exponents are not defined on cylinder "
            "domains; use degree 0")
    step_cfg = config.get("step", {})
    try:
        rule = StepRule(float(step_cfg.get(
            "a", defaults.step_a if defaults else 1.0)),
            float(step_cfg.get("b", defaults.step_b if defaults else 0.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    max_iters = int(config.get("max_iters", 0))
    if max_iters < 0:
        raise ConfigError("max_iters must be nonnegative")
    workers = int(config.get("workers", 1))
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    resolved = {
        "system": config["system"],
        "params": config.get("params", {}),
        "degree": degree,
        "include_constant": include_constant,
        "counts": list(counts),
        "refine": bool(config.get("refine", True)),
        "step": {"a": rule.a, "b": rule.b},
        "max_iters": max_iters,
        "workers": workers,
    }
    if "initial" in config:
        resolved["initial"] = config["initial"]
    if "seed" in config:
        resolved["seed"] = config["seed"]
    return case, resolved


def _initial_metric(case: SystemCase, resolved: dict) -> ConformalMetric:
    n = case.system.dimension
    basis = PolyBasis.create(n, resolved["degree"],
                             resolved["include_constant"])
    initial = resolved.get("initial")
    if initial is None:
        return ConformalMetric(PolyCoeffs(basis, np.zeros(len(basis))),
                               np.eye(n))
    try:
        a = np.asarray(initial.get("a", np.zeros(len(basis))), dtype=float)
        p = np.asarray(initial.get("p", np.eye(n)), dtype=float)
        return ConformalMetric(PolyCoeffs(basis, a), p)
    except (ValueError, AttributeError) as exc:
        raise ConfigError(f"invalid initial metric: {exc}") from exc


# ---------------------------------------------------------------------------
# outputs

def _write_csv(path: Path, records, dimension: int) -> None:
    header = ["k", "theta", "value", "best_value", "k_star",
              "subgrad_norm", "gap_ok"]
    header += [f"x_star_{i}" for i in range(dimension)]
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in records:
            row = [r.k, repr(r.theta), repr(r.value), repr(r.best_value),
                   r.k_star, repr(r.subgrad_norm), int(r.gap_ok)]
            row += [repr(float(v)) for v in r.x_star]
            w.writerow(row)


def _write_best_metric(path: Path, case_name: str, params: dict,
                       m: ConformalMetric, counts) -> None:
    payload = {
        "system": case_name,
        "params": params,
        "basis": m.basis.descriptor(),
        "a": m.a.tolist(),
        "p": m.p.tolist(),
        "grid": list(counts),
    }
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _write_summary(path: Path, resolved: dict, result: RunResult,
                   case: SystemCase, status: str) -> None:
    records = result.records
    payload = {
        "status": status,
        "config": resolved,
        "iterations": len(records),
        "best_value": result.best_value if records else None,
        "best_iteration": result.best_iteration if records else None,
        "initial_value": records[0].value if records else None,
        "final_value": records[-1].value if records else None,
        "total_wall_time_ms": sum(r.wall_time_ms for r in records),
        "reference": case.reference,
    }
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _write_plot(path: Path, records) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ks = [r.k for r in records]
    values = [r.value for r in records]
    best = [r.best_value for r in records]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(ks, values, lw=0.8, label="value")
    ax.loglog(ks, best, lw=1.2, label="best value")
    ax.set_xlabel("iteration")
    ax.set_ylabel("entropy estimate")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _emit_outputs(out_dir: Path, case: SystemCase, resolved: dict,
                  result: RunResult, status: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    n = case.system.dimension
    _write_csv(out_dir / "iterations.csv", result.records, n)
    _write_best_metric(out_dir / "best_metric.json", resolved["system"],
                       resolved["params"], result.best_metric,
                       resolved["counts"])
    _write_summary(out_dir / "summary.json", resolved, result, case, status)
    if result.records:
        _write_plot(out_dir / "convergence.svg", result.records)


# ---------------------------------------------------------------------------
# subcommands

def cmd_run(args) -> int:
    config = _load_json(args.config)
    if args.out_dir is not None:
        config["out_dir"] = args.out_dir
    if args.workers is not None:
        config["workers"] = args.workers
    if args.max_iters is not None:
        config["max_iters"] = args.max_iters
    case, resolved = _resolve_run_config(config)
    out_dir = Path(config.get("out_dir", "."))
    initial = _initial_metric(case, resolved)
    try:
        result = run(case, initial, StepRule(**resolved["step"]),
                     resolved["max_iters"], resolved["counts"],
                     refine=resolved["refine"], workers=resolved["workers"],
                     config=resolved)
    except IterationError as exc:
        partial = RunResult(
            best_value=min((r.value for r in exc.records), default=np.inf),
            best_metric=initial, best_iteration=0, records=exc.records,
            config=resolved)
        _emit_outputs(out_dir, case, resolved, partial,
                      status=f"aborted: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return 3
    _emit_outputs(out_dir, case, resolved, result, status="ok")
    print(json.dumps({"best_value": result.best_value,
                      "best_iteration": result.best_iteration,
                      "out_dir": str(out_dir)}))
    return 0


def cmd_evaluate(args) -> int:
    payload = _load_json(args.metric)
    basis_info = payload.get("basis", {})
    if basis_info.get("ordering") != ORDERING_TAG:
        raise ConfigError(
            f"metric file uses monomial ordering "
            f"{basis_info.get('ordering')!r}; this build reads "
            f"{ORDERING_TAG!r} and refuses to reinterpret coefficients")
    system = args.system or payload.get("system")
    config = {"system": system, "params": payload.get("params", {})}
    case = _get_case(config)
    n = case.system.dimension
    if basis_info.get("n_vars") != n:
        raise ConfigError(
            f"metric basis is over {basis_info.get('n_vars')} variables; "
            f"system {system!r} has dimension {n}")
    basis = PolyBasis.create(n, int(basis_info.get("degree", 0)),
                             bool(basis_info.get("include_constant", False)))
    metric = ConformalMetric(PolyCoeffs(basis, np.asarray(payload["a"])),
                             np.asarray(payload["p"], dtype=float))
    counts = args.grid or payload.get("grid")
    if counts is None or len(counts) != len(case.domain.axes):
        raise ConfigError(
            f"need {len(case.domain.axes)} grid counts for {system!r}")
    ws = GridWorkspace(case, counts, refine=not args.no_refine,
                       workers=args.workers)
    inner = ws.maximize(metric)
    value = inner.value if case.is_discrete \
        else inner.value / (2.0 * np.log(2.0))
    print(json.dumps({"system": system, "value": value,
                      "x_star": inner.x_star.tolist(),
                      "k_star": inner.k_star,
                      "gap_ok": inner.gap_ok}))
    return 0


def cmd_bounds(args) -> int:
    params = {}
    for key in ("gamma", "delta", "sigma", "rho", "beta"):
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    case = _get_case({"system": args.system, "params": params})
    if not case.reference:
        raise ConfigError(
            f"system {args.system!r} has no closed-form reference values")
    print(json.dumps({"system": args.system, **case.reference}))
    return 0


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="restent",
        description="Upper bounds on restoration entropy via Riemannian "
                    "subgradient optimization over conformal metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured run")
    p_run.add_argument("config", help="path to a JSON run configuration")
    p_run.add_argument("--out-dir", help="output directory override")
    p_run.add_argument("--workers", type=int, help="worker count override")
    p_run.add_argument("--max-iters", type=int,
                       help="iteration budget override")
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("evaluate",
                            help="re-evaluate a stored metric file")
    p_eval.add_argument("metric", help="path to a best_metric.json file")
    p_eval.add_argument("--system", help="system name override")
    p_eval.add_argument("--grid", type=int, nargs="+",
                        help="grid counts override")
    p_eval.add_argument("--workers", type=int, default=1)
    p_eval.add_argument("--no-refine", action="store_true",
                        help="skip the refinement pass")
    p_eval.set_defaults(func=cmd_evaluate)

    p_bounds = sub.add_parser("bounds",
                              help="print closed-form reference values")
    p_bounds.add_argument("--system", required=True)
    for key in ("gamma", "delta", "sigma", "rho", "beta"):
        p_bounds.add_argument(f"--{key}", type=float)
    p_bounds.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"error: missing config key {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
