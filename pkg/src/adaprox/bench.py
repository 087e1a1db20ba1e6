"""Sweep harness: method x theta x seed grids, CSV results, convex rate suite.

Every cell of a sweep is fully seeded and independent, so execution order
(and worker count) never changes the results; rows are written in canonical
sorted order and a JSON manifest records the exact configuration next to
the CSV.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .mirror import DEFAULT_DEGREES, KernelSpec, run_md
from .models import (
    PROX_LINEAR,
    SUBGRADIENT,
    TRUNCATED,
    ConfigurationError,
    ModelKind,
)
from .problems import generate, least_squares_minimizer
from .solver import SolverConfig, convex_gap_trace, full_objective, run, stop_target_for
from .stepsize import CONSTANT, GROWTH, PLAIN, REFERENCE, SQRT_HORIZON, StepsizeParams

WORKERS_ENV_VAR = "ADAPROX_WORKERS"

# method name -> (model tag, policy); MD is handled separately
METHOD_TABLE = {
    "SGD": (SUBGRADIENT, CONSTANT),
    "SGD-G": (SUBGRADIENT, GROWTH),
    "SGD-R": (SUBGRADIENT, REFERENCE),
    "SPL": (PROX_LINEAR, CONSTANT),
    "SPL-G": (PROX_LINEAR, GROWTH),
    "SPL-R": (PROX_LINEAR, REFERENCE),
    "TRUNC": (TRUNCATED, CONSTANT),
    "TRUNC-G": (TRUNCATED, GROWTH),
    "TRUNC-R": (TRUNCATED, REFERENCE),
    "MD": None,
}

CSV_HEADER = [
    "model",
    "method",
    "theta",
    "seed",
    "cond_kappa",
    "p_fail",
    "converged",
    "diverged",
    "iters_to_converge",
    "final_objective",
    "max_iterate_norm",
    "wall_time_ms",
]


def default_theta_grid() -> list[float]:
    """25 log-spaced scale factors over [1e-2, 1e1]."""
    return [float(v) for v in np.logspace(-2.0, 1.0, 25)]


def extended_theta_grid() -> list[float]:
    """41 log-spaced scale factors over [1e-2, 1e8] for divergence probing."""
    return [float(v) for v in np.logspace(-2.0, 8.0, 41)]


@dataclass(frozen=True)
class ProblemSpec:
    model: str
    m: int = 300
    n: int = 100
    cond_kappa: float = 1.0
    p_fail: float = 0.2


@dataclass
class SweepConfig:
    problems: list[ProblemSpec]
    methods: list[str]
    theta_grid: list[float] = field(default_factory=default_theta_grid)
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    epochs: int = 400
    alpha: float = 1.0
    output_dir: str = "out"
    problem_seed: int = 0
    record_stride: int | None = None
    divergence_cap: float = 1e150
    workers: int = 0  # 0: use ADAPROX_WORKERS env var, default 1

    def validate(self) -> None:
        if not self.problems:
            raise ConfigurationError("at least one problem is required")
        if not self.methods:
            raise ConfigurationError("at least one method is required")
        for meth in self.methods:
            if meth not in METHOD_TABLE:
                raise ConfigurationError(f"unknown method {meth!r}")
        for spec in self.problems:
            if "MD" in self.methods and spec.model not in DEFAULT_DEGREES:
                raise ConfigurationError(f"method MD does not support model {spec.model!r}")
        grid = list(self.theta_grid)
        if not grid or any(not t > 0 for t in grid) or sorted(grid) != grid:
            raise ConfigurationError("theta_grid must be a sorted, strictly positive sequence")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be positive")
        if not self.alpha > 0:
            raise ConfigurationError("alpha must be positive")


@dataclass
class SweepResultRow:
    model: str
    method: str
    theta: float
    seed: int
    cond_kappa: float
    p_fail: float
    converged: bool
    diverged: bool
    iters_to_converge: int | None
    final_objective: float
    max_iterate_norm: float
    wall_time_ms: float

    def to_csv_fields(self) -> list[str]:
        return [
            self.model,
            self.method,
            repr(self.theta),
            str(self.seed),
            repr(self.cond_kappa),
            repr(self.p_fail),
            "true" if self.converged else "false",
            "true" if self.diverged else "false",
            "" if self.iters_to_converge is None else str(self.iters_to_converge),
            repr(self.final_objective),
            repr(self.max_iterate_norm),
            repr(self.wall_time_ms),
        ]


def parse_csv_row(fields: dict) -> SweepResultRow:
    """Inverse of SweepResultRow.to_csv_fields for a DictReader row."""
    raw_iters = fields["iters_to_converge"]
    return SweepResultRow(
        model=fields["model"],
        method=fields["method"],
        theta=float(fields["theta"]),
        seed=int(fields["seed"]),
        cond_kappa=float(fields["cond_kappa"]),
        p_fail=float(fields["p_fail"]),
        converged=fields["converged"].lower() == "true",
        diverged=fields["diverged"].lower() == "true",
        iters_to_converge=None if raw_iters == "" else int(raw_iters),
        final_objective=float(fields["final_objective"]),
        max_iterate_norm=float(fields["max_iterate_norm"]),
        wall_time_ms=float(fields["wall_time_ms"]),
    )


def load_config(path: str) -> SweepConfig:
    """Read a flat JSON sweep configuration; unknown keys are rejected."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(SweepConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    problems = [ProblemSpec(**p) for p in raw.pop("problems", [])]
    grid = raw.pop("theta_grid", None)
    if grid == "default" or grid is None:
        grid = default_theta_grid()
    elif grid == "extended":
        grid = extended_theta_grid()
    elif not isinstance(grid, list):
        raise ConfigurationError("theta_grid must be a list, 'default' or 'extended'")
    cfg = SweepConfig(problems=problems, theta_grid=[float(t) for t in grid], **raw)
    cfg.validate()
    return cfg


def _instance_seed(config: SweepConfig, problem_index: int) -> int:
    return config.problem_seed + problem_index


def run_cell(problem, method: str, theta: float, seed: int, epochs: int, alpha: float,
             record_stride: int | None = None, divergence_cap: float = 1e150):
    """Execute one sweep cell and return (row, record)."""
    K = epochs * problem.m
    t0 = time.perf_counter()
    if method == "MD":
        kernel = KernelSpec(DEFAULT_DEGREES[problem.model])
        record = run_md(
            problem,
            kernel,
            theta,
            K,
            seed,
            record_stride=record_stride,
            divergence_cap=divergence_cap,
        )
    else:
        tag, policy = METHOD_TABLE[method]
        cfg = SolverConfig(
            model=ModelKind(tag),
            policy=policy,
            params=StepsizeParams(theta=theta, alpha=alpha, horizon=K, mode=PLAIN),
            epochs=epochs,
            seed=seed,
            record_stride=record_stride,
            divergence_cap=divergence_cap,
        )
        record = run(problem, cfg)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    row = SweepResultRow(
        model=problem.model,
        method=method,
        theta=float(theta),
        seed=int(seed),
        cond_kappa=problem.cond_kappa,
        p_fail=problem.p_fail,
        converged=record.converged,
        diverged=record.diverged,
        iters_to_converge=record.iters_to_converge,
        final_objective=float(record.objective_per_epoch[-1]),
        max_iterate_norm=record.max_iterate_norm,
        wall_time_ms=elapsed_ms,
    )
    return row, record


def sweep_cells(config: SweepConfig):
    """Yield (row, record) for every cell of the sweep, in canonical order."""
    config.validate()
    for p_idx, spec in enumerate(config.problems):
        problem = generate(
            m=spec.m,
            n=spec.n,
            cond_kappa=spec.cond_kappa,
            p_fail=spec.p_fail,
            model=spec.model,
            seed=_instance_seed(config, p_idx),
        )
        for method in sorted(config.methods):
            for theta in config.theta_grid:
                for seed in config.seeds:
                    yield run_cell(
                        problem,
                        method,
                        theta,
                        seed,
                        config.epochs,
                        config.alpha,
                        config.record_stride,
                        config.divergence_cap,
                    )


def _cell_args(config: SweepConfig):
    args = []
    for p_idx, spec in enumerate(config.problems):
        problem = generate(
            m=spec.m,
            n=spec.n,
            cond_kappa=spec.cond_kappa,
            p_fail=spec.p_fail,
            model=spec.model,
            seed=_instance_seed(config, p_idx),
        )
        for method in sorted(config.methods):
            for theta in config.theta_grid:
                for seed in config.seeds:
                    args.append(
                        (
                            problem,
                            method,
                            theta,
                            seed,
                            config.epochs,
                            config.alpha,
                            config.record_stride,
                            config.divergence_cap,
                        )
                    )
    return args


def _run_cell_row(args):
    row, _ = run_cell(*args)
    return row


def _row_sort_key(row: SweepResultRow):
    return (row.model, row.cond_kappa, row.p_fail, row.method, row.theta, row.seed)


def resolve_workers(workers: int) -> int:
    if workers and workers > 0:
        return workers
    env = os.environ.get(WORKERS_ENV_VAR, "")
    if env.strip():
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigurationError(f"{WORKERS_ENV_VAR} must be an integer") from exc
    return 1


def sweep(config: SweepConfig | str, output_dir: str | None = None) -> str:
    """Execute a sweep, write results.csv plus manifest.json, return the CSV path."""
    if isinstance(config, str):
        config = load_config(config)
    config.validate()
    out_dir = Path(output_dir if output_dir is not None else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    args = _cell_args(config)
    workers = resolve_workers(config.workers)
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell_row, args, chunksize=4))
    else:
        rows = [_run_cell_row(a) for a in args]
    rows.sort(key=_row_sort_key)

    csv_path = out_dir / "results.csv"
    _write_rows_csv(csv_path, rows)

    manifest = {
        "artifact_version": __version__,
        "config": {
            "problems": [dataclasses.asdict(p) for p in config.problems],
            "methods": sorted(config.methods),
            "theta_grid": list(config.theta_grid),
            "seeds": list(config.seeds),
            "epochs": config.epochs,
            "alpha": config.alpha,
            "problem_seed": config.problem_seed,
            "divergence_cap": config.divergence_cap,
        },
        "iterations_per_run": [config.epochs * p.m for p in config.problems],
        "cells": [
            {
                "model": r.model,
                "cond_kappa": r.cond_kappa,
                "p_fail": r.p_fail,
                "method": r.method,
                "theta": r.theta,
                "seed": r.seed,
            }
            for r in rows
        ],
    }
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return str(csv_path)


def _write_rows_csv(path, rows) -> None:
    lines = [",".join(CSV_HEADER)]
    lines.extend(",".join(r.to_csv_fields()) for r in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# -- convex rate suite --------------------------------------------------------

CONVEX_DEFAULTS = {
    "m": 50,
    "n": 10,
    "cond_kappa": 10.0,
    "p_fail": 0.2,
    "horizons": [100, 1000, 10000],
    "seeds": list(range(20)),
    "alpha": 10.0,
    "policies": [CONSTANT, GROWTH, REFERENCE],
    "problem_seed": 0,
    "output_dir": "out",
}

# Vanishing offset keeps the theory-mode formulas valid while leaving the
# horizon-scaled term as the whole weight, which is the convex-mode setting.
_CONVEX_RHO = 1e-9


def load_convex_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    unknown = set(raw) - set(CONVEX_DEFAULTS)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    cfg = dict(CONVEX_DEFAULTS)
    cfg.update(raw)
    return cfg


def convex_suite(config: dict | str | None = None, output_dir: str | None = None) -> str:
    """Optimality-gap decay suite on the convex least-squares instance.

    For each policy and horizon, runs the solver over all seeds without early
    stopping, records the final running-minimum gap to the exact minimizer,
    and fits a log-log slope of the mean gap against the horizon.  Returns
    the path of the JSON report.
    """
    if config is None:
        config = dict(CONVEX_DEFAULTS)
    elif isinstance(config, str):
        config = load_convex_config(config)
    else:
        merged = dict(CONVEX_DEFAULTS)
        merged.update(config)
        config = merged
    out_dir = Path(output_dir if output_dir is not None else config["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    problem = generate(
        m=config["m"],
        n=config["n"],
        cond_kappa=config["cond_kappa"],
        p_fail=config["p_fail"],
        model="ls_convex",
        seed=config["problem_seed"],
    )
    x_star = least_squares_minimizer(problem)
    psi_star = full_objective(problem, x_star)
    stop_target, _ = stop_target_for(problem, 1.2)

    report: dict = {
        "instance": {
            "m": problem.m,
            "n": problem.n,
            "cond_kappa": problem.cond_kappa,
            "p_fail": problem.p_fail,
            "problem_seed": config["problem_seed"],
            "psi_star": psi_star,
            "f_at_xhat": problem.f_at_xhat,
        },
        "alpha": config["alpha"],
        "policies": {},
    }
    for policy in config["policies"]:
        rows = []
        mean_gaps = []
        for K in config["horizons"]:
            gaps = []
            crossed = 0
            for seed in config["seeds"]:
                cfg = SolverConfig(
                    model=ModelKind(SUBGRADIENT),
                    policy=policy,
                    params=StepsizeParams(
                        rho=_CONVEX_RHO,
                        kappa=0.0,
                        tau=0.0,
                        alpha=config["alpha"],
                        horizon=int(K),
                        mode=SQRT_HORIZON,
                    ),
                    seed=seed,
                )
                trace = convex_gap_trace(problem, cfg, x_star)
                gap = float(trace[-1])
                gaps.append(gap)
                if gap + psi_star <= stop_target:
                    crossed += 1
            mean_gap = float(np.mean(gaps))
            stderr = float(np.std(gaps) / np.sqrt(len(gaps)))
            mean_gaps.append(mean_gap)
            rows.append(
                {
                    "horizon": int(K),
                    "mean_min_gap": mean_gap,
                    "stderr": stderr,
                    "threshold_crossed": crossed,
                    "runs": len(gaps),
                }
            )
        if all(g > 0 for g in mean_gaps) and len(mean_gaps) >= 2:
            slope = float(
                np.polyfit(np.log10(config["horizons"]), np.log10(mean_gaps), 1)[0]
            )
        else:
            slope = None  # degenerate gaps (e.g. started at the optimum)
        report["policies"][policy] = {"rows": rows, "loglog_slope": slope}

    report_path = out_dir / "convex_report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return str(report_path)
