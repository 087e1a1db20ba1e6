"""Moreau-envelope diagnostics for the full-batch objective.

The envelope of the objective psi at smoothing weight rho is
min_z psi(z) + (rho/2)||z - x||^2; its gradient norm rho ||x - z_opt||
measures how close x is to a stationary point.  The inner problem is
strongly convex once rho exceeds the weak-convexity modulus of psi.  It is
solved by a deterministic full-batch subgradient method with Polyak-type
steps against a running lower target: the target offset below the best
value seen is halved whenever progress stalls, which handles the sharp
(kinked) geometry of absolute-value losses at high accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import LS_CONVEX, ConfigurationError, batch_loss
from .problems import weak_convexity_estimate

# Halve the target offset after this many steps without delta/4 improvement.
_STALL_STEPS = 10


@dataclass(frozen=True)
class EnvelopeReport:
    """Result of one envelope evaluation at a base point x.

    grad_norm equals rho * ||x - prox_point|| by definition, and
    envelope_value never exceeds psi(x) because the inner search starts at x.
    """

    prox_point: np.ndarray
    envelope_value: float
    grad_norm: float
    inner_iters_used: int
    inner_residual: float


def default_smoothing_weight(problem) -> float:
    """Twice the estimated weak-convexity modulus plus one."""
    return 2.0 * weak_convexity_estimate(problem) + 1.0


def _subgrad_coeffs(kind: str, u: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-sample d(loss)/du coefficients for the full batch."""
    if kind == LS_CONVEX:
        return 2.0 * (u - b)
    if kind == "r1":
        res = u * u - b
        return np.sign(res) * 2.0 * u
    if kind == "r2":
        res = u**5 + u**3 + 1.0 - b
        return np.sign(res) * (5.0 * u**4 + 3.0 * u**2)
    if kind == "r3":
        e = np.exp(u)
        return np.sign(e + 10.0 - b) * e
    if kind == "lad":
        return np.sign(u - b)
    raise ConfigurationError(f"unknown loss kind {kind!r}")


def prox_point(
    problem,
    x: np.ndarray,
    rho: float,
    inner_iters: int = 500,
    inner_tol: float = 1e-9,
) -> EnvelopeReport:
    """Approximate minimizer of psi(z) + (rho/2)||z - x||^2 and derived diagnostics.

    rho must exceed the instance's weak-convexity modulus for the inner
    problem to be strongly convex; the caller supplies it (see
    :func:`default_smoothing_weight`).  The solve stops early once the
    per-step movement falls below `inner_tol` or the target offset is
    exhausted.
    """
    if not rho > 0.0:
        raise ConfigurationError("rho must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise ConfigurationError("base point has the wrong dimension")
    A = problem.A
    b = problem.b
    m = problem.m
    kind = problem.model

    z = x.copy()
    best_z = x.copy()
    best_val = float(np.mean(batch_loss(kind, A, b, z)))  # quadratic term is 0 at z = x
    if not np.isfinite(best_val):
        raise FloatingPointError("objective is non-finite at the base point")

    # composite values are nonnegative here, so best_val bounds the gap
    delta = 0.5 * best_val + 1e-12
    anchor_val = best_val
    stall = 0
    t = 0
    move = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        while t < inner_iters and delta > 1e-17 * (1.0 + abs(best_val)):
            u = A @ z
            diff = z - x
            val = float(np.mean(batch_loss(kind, A, b, z)) + 0.5 * rho * np.dot(diff, diff))
            if not np.isfinite(val):
                raise FloatingPointError("inner envelope solve produced non-finite values")
            if val < best_val:
                best_val = val
                best_z = z.copy()
            w = _subgrad_coeffs(kind, u, b) / m
            d = A.T @ w + rho * diff
            dsq = float(np.dot(d, d))
            if dsq == 0.0:
                best_val = val
                best_z = z.copy()
                move = 0.0
                break
            stall += 1
            if anchor_val - best_val >= 0.25 * delta:
                anchor_val = best_val
                stall = 0
            elif stall >= _STALL_STEPS:
                delta *= 0.5
                anchor_val = best_val
                stall = 0
                z = best_z.copy()
                continue
            eta = (val - best_val + delta) / dsq
            z = z - eta * d
            move = eta * float(np.sqrt(dsq))
            t += 1
            if move <= inner_tol:
                break

        # account for the final iterate
        diff = z - x
        val = float(np.mean(batch_loss(kind, A, b, z)) + 0.5 * rho * np.dot(diff, diff))
        if np.isfinite(val) and val < best_val:
            best_val = val
            best_z = z.copy()

    grad_norm = rho * float(np.linalg.norm(x - best_z))
    return EnvelopeReport(
        prox_point=best_z,
        envelope_value=best_val,
        grad_norm=grad_norm,
        inner_iters_used=t,
        inner_residual=move,
    )


def envelope_trace(
    problem,
    record,
    rho: float,
    inner_iters: int = 500,
    inner_tol: float = 1e-9,
) -> np.ndarray:
    """Squared envelope gradient norm at each recorded iterate of a run.

    `record` may be a RunRecord or a bare (num_points, n) array of iterates.
    """
    iterates = record.iterates if hasattr(record, "iterates") else np.asarray(record, dtype=float)
    if iterates.ndim == 1:
        iterates = iterates.reshape(1, -1)
    out = np.empty(iterates.shape[0])
    for idx in range(iterates.shape[0]):
        rep = prox_point(problem, iterates[idx], rho, inner_iters, inner_tol)
        out[idx] = rep.grad_norm**2
    return out
