"""Stochastic model-based solver: sampling, stepsize query, prox step, tracing.

One run draws an i.i.d. sample per iteration, queries the stepsize policy
(with an additional independent sample for the reference policy), solves the
prox subproblem in closed form, and records a thinned trace.  The full
objective is evaluated once per epoch; a run converges at the first epoch
boundary whose objective falls below the stopping threshold, and diverges
when any iterate norm or objective exceeds the divergence cap or turns
non-finite.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, problems
from .models import (
    LAD,
    LS_CONVEX,
    PROX_LINEAR,
    SUBGRADIENT,
    TRUNCATED,
    ConfigurationError,
    ModelKind,
    RegularizerSpec,
    batch_loss,
)
from .stepsize import (
    CONSTANT,
    GROWTH,
    PLAIN,
    POLICIES,
    POLY_ITER,
    REFERENCE,
    SQRT_HORIZON,
    StepsizeParams,
)

_LOSS_CODE = {
    "r1": _kernels.LOSS_R1,
    "r2": _kernels.LOSS_R2,
    "r3": _kernels.LOSS_R3,
    LAD: _kernels.LOSS_LAD,
    LS_CONVEX: _kernels.LOSS_LS,
}
_MODEL_CODE = {
    SUBGRADIENT: _kernels.MODEL_SUBGRADIENT,
    PROX_LINEAR: _kernels.MODEL_PROX_LINEAR,
    TRUNCATED: _kernels.MODEL_TRUNCATED,
}
_POLICY_CODE = {
    CONSTANT: _kernels.POLICY_CONSTANT,
    GROWTH: _kernels.POLICY_GROWTH,
    REFERENCE: _kernels.POLICY_REFERENCE,
}
_MODE_CODE = {
    SQRT_HORIZON: _kernels.MODE_SQRT_HORIZON,
    POLY_ITER: _kernels.MODE_POLY_ITER,
    PLAIN: _kernels.MODE_PLAIN,
}

# Additive stopping tolerance when the target objective is exactly zero, in
# which case the multiplicative rule degenerates.
ZERO_TARGET_TOL = 1e-12


@dataclass
class SolverConfig:
    """Everything one run needs besides the problem instance.

    `params.horizon` is the total iteration count K.  When `epochs` is given
    it must satisfy K = epochs * m; leave it None to run a horizon that is
    not a whole number of epochs.  `record_stride` defaults to roughly 256
    recorded steps per run.
    """

    model: ModelKind
    policy: str
    params: StepsizeParams
    regularizer: RegularizerSpec = field(default_factory=RegularizerSpec.zero)
    epochs: int | None = None
    stop_factor: float | None = 1.2
    seed: int = 0
    record_stride: int | None = None
    divergence_cap: float = 1e150
    x0: np.ndarray | None = None


@dataclass
class RunRecord:
    """Per-run trace.

    Thinned series are aligned: entry t describes iteration `recorded_iters[t]`,
    with `iterates[t]` the iterate before that step and `step_norm_series[t]`
    the movement it produced.  `objective_per_epoch[e]` is the full objective
    after `objective_iters[e]` iterations (starting at 0).
    """

    iterations_run: int
    converged: bool
    diverged: bool
    iters_to_converge: int | None
    objective_per_epoch: np.ndarray
    objective_iters: np.ndarray
    max_iterate_norm: float
    gamma_series: np.ndarray
    iterate_norm_series: np.ndarray
    step_norm_series: np.ndarray
    lip_series: np.ndarray
    lip_ref_series: np.ndarray
    recorded_iters: np.ndarray
    iterates: np.ndarray
    final_x: np.ndarray
    sample_stream_keys: tuple


def sample_indices(seed: int, m: int, total: int) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Uniform-with-replacement sample indices for update and reference draws.

    The two index arrays come from disjoint child streams of the run seed, so
    the reference draw at every iteration is independent of the update draw;
    the returned spawn keys make that separation auditable.
    """
    root = np.random.SeedSequence(seed)
    upd_ss, ref_ss = root.spawn(2)
    idx_upd = np.random.default_rng(upd_ss).integers(0, m, size=total, dtype=np.int64)
    idx_ref = np.random.default_rng(ref_ss).integers(0, m, size=total, dtype=np.int64)
    return idx_upd, idx_ref, (upd_ss.spawn_key, ref_ss.spawn_key)


def stop_target_for(problem, stop_factor: float | None) -> tuple[float, bool]:
    """Stopping threshold: stop_factor * f(x_hat), or an additive tolerance at zero."""
    if stop_factor is None:
        return 0.0, False
    f_hat = problem.f_at_xhat
    if f_hat > 0.0:
        return stop_factor * f_hat, True
    return f_hat + ZERO_TARGET_TOL, True


def _validate(problem, cfg: SolverConfig) -> None:
    if cfg.policy not in POLICIES:
        raise ConfigurationError(f"unknown policy {cfg.policy!r}")
    if problem.model not in _LOSS_CODE:
        raise ConfigurationError(f"unknown problem model {problem.model!r}")
    if cfg.model.tag == PROX_LINEAR and problem.model == LS_CONVEX:
        raise ConfigurationError("prox_linear model requires an absolute-value loss")
    if cfg.regularizer.kind == "l1" and cfg.model.tag != SUBGRADIENT:
        raise ConfigurationError("l1 regularizer is supported with the subgradient model only")
    if cfg.stop_factor is not None and not cfg.stop_factor > 1.0:
        raise ConfigurationError("stop_factor must exceed 1")
    if cfg.epochs is not None:
        if cfg.epochs < 1:
            raise ConfigurationError("epochs must be positive")
        if cfg.params.horizon != cfg.epochs * problem.m:
            raise ConfigurationError("params.horizon must equal epochs * m")
    if cfg.record_stride is not None and cfg.record_stride < 1:
        raise ConfigurationError("record_stride must be positive")
    if cfg.x0 is not None and np.shape(cfg.x0) != (problem.n,):
        raise ConfigurationError("x0 has the wrong dimension")
    if cfg.divergence_cap <= 0:
        raise ConfigurationError("divergence_cap must be positive")


def run(problem, cfg: SolverConfig) -> RunRecord:
    """Execute one fully seeded run and return its trace."""
    _validate(problem, cfg)
    K = cfg.params.horizon
    m = problem.m
    stride = cfg.record_stride if cfg.record_stride is not None else max(1, K // 256)

    if cfg.x0 is not None:
        x = np.array(cfg.x0, dtype=float)
    else:
        x = problems.initial_point(problem.model, problem.n, cfg.seed)

    idx_upd, idx_ref, keys = sample_indices(cfg.seed, m, K)
    stop_target, has_stop = stop_target_for(problem, cfg.stop_factor)

    A = np.ascontiguousarray(problem.A, dtype=float)
    b = np.ascontiguousarray(problem.b, dtype=float)
    anorm = np.sqrt(np.sum(A * A, axis=1))

    nrec_max = (K - 1) // stride + 1
    nobj_max = K // m + 2
    rec_k = np.zeros(nrec_max, dtype=np.int64)
    rec_gamma = np.zeros(nrec_max)
    rec_normx = np.zeros(nrec_max)
    rec_lip = np.zeros(nrec_max)
    rec_lipref = np.zeros(nrec_max)
    rec_step = np.zeros(nrec_max)
    rec_iter = np.zeros((nrec_max, problem.n))
    obj_vals = np.zeros(nobj_max)
    obj_iters = np.zeros(nobj_max, dtype=np.int64)

    status, iters_done, nrec, nobj, conv_iter, max_norm = _kernels.run_chain(
        A,
        b,
        anorm,
        x,
        idx_upd,
        idx_ref,
        _LOSS_CODE[problem.model],
        _MODEL_CODE[cfg.model.tag],
        _POLICY_CODE[cfg.policy],
        _MODE_CODE[cfg.params.mode],
        _kernels.REG_L1 if cfg.regularizer.kind == "l1" else _kernels.REG_ZERO,
        cfg.params.rho,
        cfg.params.kappa,
        cfg.params.tau,
        cfg.params.alpha,
        cfg.params.theta,
        cfg.params.zeta,
        cfg.regularizer.mu,
        cfg.model.lower_bound,
        K,
        m,
        stop_target,
        has_stop,
        cfg.divergence_cap,
        stride,
        rec_k,
        rec_gamma,
        rec_normx,
        rec_lip,
        rec_lipref,
        rec_step,
        rec_iter,
        obj_vals,
        obj_iters,
    )

    converged = status == _kernels.STATUS_CONVERGED
    diverged = status == _kernels.STATUS_DIVERGED
    return RunRecord(
        iterations_run=int(iters_done),
        converged=converged,
        diverged=diverged,
        iters_to_converge=int(conv_iter) if converged else None,
        objective_per_epoch=obj_vals[:nobj].copy(),
        objective_iters=obj_iters[:nobj].copy(),
        max_iterate_norm=float(max_norm),
        gamma_series=rec_gamma[:nrec].copy(),
        iterate_norm_series=rec_normx[:nrec].copy(),
        step_norm_series=rec_step[:nrec].copy(),
        lip_series=rec_lip[:nrec].copy(),
        lip_ref_series=rec_lipref[:nrec].copy(),
        recorded_iters=rec_k[:nrec].copy(),
        iterates=rec_iter[:nrec].copy(),
        final_x=x,
        sample_stream_keys=keys,
    )


def full_objective(problem, x: np.ndarray) -> float:
    """Exact average loss over all samples; non-finite values signal divergence."""
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise ConfigurationError("iterate has the wrong dimension")
    return float(np.mean(batch_loss(problem.model, problem.A, problem.b, x)))


def convex_gap_trace(problem, cfg: SolverConfig, x_star: np.ndarray) -> np.ndarray:
    """Per-epoch running minimum of the optimality gap on a convex instance.

    The run always covers the full horizon: the stopping rule is not applied,
    so the gap statistics are comparable across horizons.  Divergence still
    halts the run.
    """
    if problem.model not in (LS_CONVEX, LAD):
        raise ConfigurationError("convex gap tracing requires a convex instance")
    if x_star is None or np.shape(x_star) != (problem.n,):
        raise ConfigurationError("x_star is required and must match the dimension")
    record = run(problem, dataclasses.replace(cfg, stop_factor=None, epochs=None))
    psi_star = full_objective(problem, x_star)
    gaps = record.objective_per_epoch - psi_star
    return np.minimum.accumulate(gaps)


def one_step_bound_violation(record: RunRecord, lip_omega: float = 0.0) -> float:
    """Largest violation of ||x_{k+1} - x_k|| <= 2 (lip + L_omega) / gamma_k.

    Nonpositive return means every recorded step satisfies the bound.
    """
    if record.recorded_iters.size == 0:
        return float("-inf")
    allowed = 2.0 * (record.lip_series + lip_omega) / record.gamma_series
    return float(np.max(record.step_norm_series - allowed))
