"""Adaptive proximal regularization weight policies and clipped-moment estimators.

A policy maps the iteration index and locally observed quantities to the
quadratic regularization weight of the prox subproblem (the inverse stepsize).
Three policies are provided:

  constant  : weight fixed over the run, scaled by the horizon
  growth    : weight scaled by a known bound on how the per-sample Lipschitz
              constant grows with the iterate norm
  reference : weight scaled by a Lipschitz estimate drawn from an independent
              sample, clipped from below by `alpha`

and each policy comes in three modes:

  sqrt_horizon : offset form rho + kappa (+ tau) + <scale> * sqrt(K)
  poly_iter    : offset form with the horizon factor replaced by k**zeta
  plain        : bare theta-scaled sqrt(K) weights without offsets, the
                 configuration used by the benchmark harness

Policies are pure: the caller supplies `growth_value` and `lip_ref`, which
keeps the required independence of the reference sample from the update
sample an auditable property of the solver, not of this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import ConfigurationError

CONSTANT = "constant"
GROWTH = "growth"
REFERENCE = "reference"
POLICIES = (CONSTANT, GROWTH, REFERENCE)

SQRT_HORIZON = "sqrt_horizon"
POLY_ITER = "poly_iter"
PLAIN = "plain"
MODES = (SQRT_HORIZON, POLY_ITER, PLAIN)


@dataclass(frozen=True)
class StepsizeParams:
    """All policy constants.

    rho levels the weak convexity of the smoothed objective and must exceed
    kappa + tau; alpha is both the constant-policy scale and the clipping
    floor of the reference policy; theta is the plain-mode scale; zeta in
    (1/2, 1) is the poly_iter exponent; horizon is the total iteration
    budget K.
    """

    rho: float = 1.0
    kappa: float = 0.0
    tau: float = 0.0
    alpha: float = 1.0
    theta: float = 1.0
    zeta: float = 0.75
    horizon: int = 1
    mode: str = SQRT_HORIZON

    def __post_init__(self):
        if not self.rho > self.kappa + self.tau:
            raise ConfigurationError("rho must exceed kappa + tau")
        if self.kappa < 0 or self.tau < 0:
            raise ConfigurationError("kappa and tau must be nonnegative")
        if not self.alpha > 0:
            raise ConfigurationError("alpha must be positive")
        if not self.theta > 0:
            raise ConfigurationError("theta must be positive")
        if not 0.5 < self.zeta < 1.0:
            raise ConfigurationError("zeta must lie in (1/2, 1)")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be a positive integer")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}")


def reg_weight(
    policy: str,
    p: StepsizeParams,
    k: int,
    norm_x: float = 0.0,
    growth_value: float = 0.0,
    lip_ref: float = 0.0,
) -> float:
    """Regularization weight for iteration k (1-based).

    `growth_value` must equal the growth bound evaluated at the iterate norm;
    `lip_ref` must come from a sample independent of the update sample.
    Non-finite inputs return nan, the caller's divergence signal.
    """
    if policy not in POLICIES:
        raise ConfigurationError(f"unknown policy {policy!r}")
    if k < 1:
        raise ConfigurationError("iteration index is 1-based")
    if p.mode == SQRT_HORIZON and k > p.horizon:
        raise ConfigurationError("iteration index exceeds the configured horizon")
    if policy == GROWTH and not np.isfinite(growth_value):
        return float("nan")
    if policy == REFERENCE and not np.isfinite(lip_ref):
        return float("nan")

    sqrt_k_total = math.sqrt(float(p.horizon))
    if p.mode == SQRT_HORIZON:
        if policy == CONSTANT:
            return p.rho + p.kappa + p.alpha * sqrt_k_total
        if policy == GROWTH:
            return p.rho + p.kappa + p.tau + p.alpha * (growth_value + 1.0) * sqrt_k_total
        return p.rho + p.tau + p.kappa + max(lip_ref, p.alpha) * sqrt_k_total
    if p.mode == POLY_ITER:
        kz = float(k) ** p.zeta
        if policy == CONSTANT:
            return p.rho + p.kappa + p.alpha * kz
        if policy == GROWTH:
            return p.rho + p.kappa + (growth_value + 1.0) * kz
        return p.rho + p.kappa + p.tau + max(lip_ref, p.alpha) * kz
    # plain mode
    if policy == CONSTANT:
        return p.theta * sqrt_k_total
    if policy == GROWTH:
        return p.theta * growth_value * sqrt_k_total
    return p.theta * max(lip_ref, p.alpha) * sqrt_k_total


def clipped_ratio_moments(
    x_samples: np.ndarray, y_samples: np.ndarray, alpha: float
) -> tuple[float, float, float]:
    """Monte-Carlo estimates of the three clipped ratio moments.

    Returns (E[X^2/max(Y,a)^2], E[X/max(Y,a)^2], E[X/max(Y,a)]) estimated by
    pairing the two sample arrays, which must hold independent draws of
    nonnegative variables.
    """
    x = np.asarray(x_samples, dtype=float)
    y = np.asarray(y_samples, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ConfigurationError("empty sample arrays")
    if x.shape != y.shape:
        raise ConfigurationError("sample arrays must have matching shapes")
    if not alpha > 0:
        raise ConfigurationError("alpha must be positive")
    if np.any(x < 0) or np.any(y < 0):
        raise ConfigurationError("samples must be nonnegative")
    den = np.maximum(y, alpha)
    m2 = float(np.mean((x / den) ** 2))
    m1a = float(np.mean(x / den**2))
    m1b = float(np.mean(x / den))
    return m2, m1a, m1b


def check_clipped_moment_bounds(
    x_samples: np.ndarray, y_samples: np.ndarray, alpha: float, n_stderr: float = 3.0
) -> dict:
    """Audit the clipped-moment inequalities on paired independent samples.

    With sigma^2 = E|X - Y|^2 the three moments are bounded by
    ((sigma+alpha)/alpha)^2, sigma/alpha^2 + 1/alpha and sigma/alpha + 1.
    sigma is estimated empirically and each inequality is checked up to
    `n_stderr` Monte-Carlo standard errors of the moment estimate.
    """
    x = np.asarray(x_samples, dtype=float)
    y = np.asarray(y_samples, dtype=float)
    m2, m1a, m1b = clipped_ratio_moments(x, y, alpha)
    n = x.size
    sigma_hat = float(np.sqrt(np.mean((x - y) ** 2)))
    den = np.maximum(y, alpha)
    terms = ((x / den) ** 2, x / den**2, x / den)
    stderrs = tuple(float(np.std(t) / np.sqrt(n)) for t in terms)
    bounds = (
        ((sigma_hat + alpha) / alpha) ** 2,
        sigma_hat / alpha**2 + 1.0 / alpha,
        sigma_hat / alpha + 1.0,
    )
    estimates = (m2, m1a, m1b)
    ok = tuple(
        est <= bound + n_stderr * se for est, bound, se in zip(estimates, bounds, stderrs)
    )
    return {
        "sigma_hat": sigma_hat,
        "estimates": estimates,
        "bounds": bounds,
        "stderrs": stderrs,
        "ok": ok,
        "all_ok": all(ok),
    }
