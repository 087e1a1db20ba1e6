"""Mirror descent baseline with radial polynomial Bregman kernels.

The kernel u(x) = ||x||^q / q + ||x||^2 / 2 has gradient
(||x||^(q-2) + 1) x; inverting it reduces to a monotone scalar root-find on
the radius, so each update costs one subgradient plus a 1-D Newton solve.
Default degrees: q = 4 for the quadratic curve, q = 10 for the quintic one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, problems
from .models import ConfigurationError
from .solver import RunRecord, sample_indices, stop_target_for

DEFAULT_DEGREES = {"r1": 4, "r2": 10}


@dataclass(frozen=True)
class KernelSpec:
    """Radial kernel degree; q = 2 reduces the mirror map to 2x."""

    q: int = 4

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 2:
            raise ConfigurationError("kernel degree q must be an integer >= 2")


def kernel_grad(kernel: KernelSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if kernel.q == 2:
        return 2.0 * x
    s = float(np.linalg.norm(x))
    return (s ** (kernel.q - 2) + 1.0) * x


def kernel_grad_inverse(kernel: KernelSpec, z: np.ndarray) -> np.ndarray:
    """The y with kernel_grad(y) = z, via the radial root r (r^(q-2) + 1) = ||z||."""
    z = np.asarray(z, dtype=float)
    t = float(np.linalg.norm(z))
    if t == 0.0:
        return np.zeros_like(z)
    r = _kernels.radial_root(t, kernel.q)
    return (r / t) * z


def run_md(
    problem,
    kernel: KernelSpec,
    theta: float,
    K: int,
    seed: int,
    stop_factor: float | None = 1.2,
    record_stride: int | None = None,
    divergence_cap: float = 1e150,
    x0: np.ndarray | None = None,
) -> RunRecord:
    """Stochastic mirror descent with constant stepsize eta = 1 / (theta sqrt(K)).

    Supported on the quadratic and quintic regression curves only.  Sampling,
    tracing and stopping semantics match the prox-model solver, and the same
    update-sample stream is used, so matched-stepsize comparisons share
    trajectories sample-for-sample.
    """
    if problem.model not in DEFAULT_DEGREES:
        raise ConfigurationError("mirror descent baseline supports models r1 and r2 only")
    if not theta > 0:
        raise ConfigurationError("theta must be positive")
    if K < 1:
        raise ConfigurationError("K must be positive")
    if stop_factor is not None and not stop_factor > 1.0:
        raise ConfigurationError("stop_factor must exceed 1")

    m = problem.m
    stride = record_stride if record_stride is not None else max(1, K // 256)
    eta = 1.0 / (theta * math.sqrt(float(K)))

    if x0 is not None:
        if np.shape(x0) != (problem.n,):
            raise ConfigurationError("x0 has the wrong dimension")
        x = np.array(x0, dtype=float)
    else:
        x = problems.initial_point(problem.model, problem.n, seed)

    idx_upd, _, keys = sample_indices(seed, m, K)
    stop_target, has_stop = stop_target_for(problem, stop_factor)

    A = np.ascontiguousarray(problem.A, dtype=float)
    b = np.ascontiguousarray(problem.b, dtype=float)
    anorm = np.sqrt(np.sum(A * A, axis=1))

    nrec_max = (K - 1) // stride + 1
    nobj_max = K // m + 2
    rec_k = np.zeros(nrec_max, dtype=np.int64)
    rec_gamma = np.zeros(nrec_max)
    rec_normx = np.zeros(nrec_max)
    rec_lip = np.zeros(nrec_max)
    rec_step = np.zeros(nrec_max)
    rec_iter = np.zeros((nrec_max, problem.n))
    obj_vals = np.zeros(nobj_max)
    obj_iters = np.zeros(nobj_max, dtype=np.int64)

    loss_code = {"r1": _kernels.LOSS_R1, "r2": _kernels.LOSS_R2}[problem.model]
    status, iters_done, nrec, nobj, conv_iter, max_norm = _kernels.run_mirror(
        A,
        b,
        anorm,
        x,
        idx_upd,
        loss_code,
        int(kernel.q),
        eta,
        K,
        m,
        stop_target,
        has_stop,
        divergence_cap,
        stride,
        rec_k,
        rec_gamma,
        rec_normx,
        rec_lip,
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
        lip_ref_series=np.full(nrec, np.nan),
        recorded_iters=rec_k[:nrec].copy(),
        iterates=rec_iter[:nrec].copy(),
        final_x=x,
        sample_stream_keys=keys,
    )
