"""Per-sample loss oracles, stochastic model functions and their prox subproblems.

The losses are robust regression residuals ``|r(<a, x>) - b|`` for several
regression curves ``r`` (plus a smooth least-squares variant used for convex
benchmarks).  A stochastic model is a convex local surrogate of the loss
anchored at the current iterate; each model kind admits a closed-form
minimizer of

    model(y) + omega(y) + (weight / 2) * ||y - x||^2

which is what :func:`prox_step` evaluates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Loss (regression curve) kinds.
R1 = "r1"                # |<a,x>^2 - b|
R2 = "r2"                # |<a,x>^5 + <a,x>^3 + 1 - b|
R3 = "r3"                # |exp(<a,x>) + 10 - b|
LAD = "lad"              # |<a,x> - b|
LS_CONVEX = "ls_convex"  # (<a,x> - b)^2

LOSS_KINDS = (R1, R2, R3, LAD, LS_CONVEX)
ABS_LOSSES = (R1, R2, R3, LAD)

# Model kinds.
SUBGRADIENT = "subgradient"
PROX_LINEAR = "prox_linear"
TRUNCATED = "truncated"
MODEL_TAGS = (SUBGRADIENT, PROX_LINEAR, TRUNCATED)

# Any intermediate above this magnitude is treated as a divergence signal.
OVERFLOW_CAP = 1e150


class ConfigurationError(ValueError):
    """Raised for unsupported or inconsistent configuration, never for numerics."""


@dataclass(frozen=True)
class Sample:
    """One measurement: a feature row and its target label."""

    a: np.ndarray
    b: float


@dataclass(frozen=True)
class ModelKind:
    """Which local surrogate to build; `lower_bound` applies to `truncated` only."""

    tag: str
    lower_bound: float = 0.0

    def __post_init__(self):
        if self.tag not in MODEL_TAGS:
            raise ConfigurationError(f"unknown model tag {self.tag!r}")


@dataclass(frozen=True)
class RegularizerSpec:
    """Composite regularizer omega.  `lip_omega` is its Lipschitz bound."""

    kind: str = "zero"
    mu: float = 0.0
    lip_omega: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "l1"):
            raise ConfigurationError(f"unknown regularizer kind {self.kind!r}")
        if self.kind == "zero" and (self.mu != 0.0 or self.lip_omega != 0.0):
            raise ConfigurationError("zero regularizer must have mu = lip_omega = 0")
        if self.mu < 0.0:
            raise ConfigurationError("mu must be nonnegative")

    @classmethod
    def zero(cls) -> "RegularizerSpec":
        return cls()

    @classmethod
    def l1(cls, mu: float, n: int) -> "RegularizerSpec":
        """l1 penalty mu*||x||_1 on an n-dimensional variable."""
        if mu < 0.0:
            raise ConfigurationError("mu must be nonnegative")
        return cls(kind="l1", mu=float(mu), lip_omega=float(mu) * float(np.sqrt(n)))

    def value(self, x: np.ndarray) -> float:
        if self.kind == "l1":
            return self.mu * float(np.sum(np.abs(x)))
        return 0.0


@dataclass(frozen=True)
class ModelEval:
    """A stochastic model at an anchor point.

    value : loss at the anchor, f(x, xi)
    c     : inner term of the model; the loss itself for subgradient/truncated
            kinds, the signed residual r(<a,x>) - b for the prox-linear kind
    g     : model slope vector (subgradient, or the inner Jacobian row)
    lip   : Lipschitz constant of the model as a function of y
    """

    value: float
    c: float
    g: np.ndarray
    lip: float

    @property
    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.value)
            and np.isfinite(self.c)
            and np.isfinite(self.lip)
            and np.all(np.isfinite(self.g))
        )


def _curve(kind: str, u: float) -> tuple[float, float]:
    """Regression value r(u) and derivative r'(u) for one projection u = <a, x>."""
    if kind == R1:
        return u * u, 2.0 * u
    if kind == R2:
        u2 = u * u
        return u2 * u2 * u + u2 * u + 1.0, 5.0 * u2 * u2 + 3.0 * u2
    if kind == R3:
        e = np.exp(u)
        return e + 10.0, e
    if kind in (LAD, LS_CONVEX):
        return u, 1.0
    raise ConfigurationError(f"unknown loss kind {kind!r}")


def evaluate_loss(kind: str, x: np.ndarray, s: Sample) -> float:
    """Per-sample loss.  Overflow propagates as inf (a divergence signal)."""
    a = np.asarray(s.a, dtype=float)
    if a.shape != np.shape(x):
        raise ConfigurationError("sample/iterate dimension mismatch")
    with np.errstate(over="ignore", invalid="ignore"):
        u = float(np.dot(a, x))
        r, _ = _curve(kind, u)
        res = r - s.b
        if kind == LS_CONVEX:
            return res * res
        return abs(res)


def batch_loss(kind: str, A: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Vector of per-sample losses for all rows of A at once."""
    with np.errstate(over="ignore", invalid="ignore"):
        u = A @ x
        if kind == R1:
            res = u * u - b
        elif kind == R2:
            res = u**5 + u**3 + 1.0 - b
        elif kind == R3:
            res = np.exp(u) + 10.0 - b
        elif kind in (LAD, LS_CONVEX):
            res = u - b
        else:
            raise ConfigurationError(f"unknown loss kind {kind!r}")
        if kind == LS_CONVEX:
            return res * res
        return np.abs(res)


def model_eval(model: ModelKind, kind: str, x: np.ndarray, s: Sample) -> ModelEval:
    """Build the stochastic model of the loss at anchor x from one sample.

    The exact sign convention at kinks is sign(0) = 0, so an exactly fitted
    sample yields a zero slope.  Non-finite intermediates are returned as-is
    and flag divergence via :attr:`ModelEval.is_finite`.
    """
    a = np.asarray(s.a, dtype=float)
    if a.shape != np.shape(x):
        raise ConfigurationError("sample/iterate dimension mismatch")
    if model.tag == PROX_LINEAR and kind not in ABS_LOSSES:
        raise ConfigurationError("prox_linear model requires an absolute-value loss")
    with np.errstate(over="ignore", invalid="ignore"):
        u = float(np.dot(a, x))
        r, dr = _curve(kind, u)
        res = r - s.b
        anorm = float(np.linalg.norm(a))
        if kind == LS_CONVEX:
            value = res * res
            coef = 2.0 * res
            return ModelEval(value=value, c=value, g=coef * a, lip=abs(coef) * anorm)
        value = abs(res)
        if model.tag == PROX_LINEAR:
            # model(y) = |c + <g, y - x>| with c the signed residual
            return ModelEval(value=value, c=res, g=dr * a, lip=abs(dr) * anorm)
        coef = float(np.sign(res)) * dr
        return ModelEval(value=value, c=value, g=coef * a, lip=abs(coef) * anorm)


def model_value(model: ModelKind, ev: ModelEval, x: np.ndarray, y: np.ndarray) -> float:
    """Evaluate the model function at y (anchored at x)."""
    inner = float(np.dot(ev.g, y - x))
    if model.tag == SUBGRADIENT:
        return ev.value + inner
    if model.tag == PROX_LINEAR:
        return abs(ev.c + inner)
    if model.tag == TRUNCATED:
        return max(ev.value + inner, model.lower_bound)
    raise ConfigurationError(f"unknown model tag {model.tag!r}")


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def prox_step(
    model: ModelKind,
    x: np.ndarray,
    ev: ModelEval,
    weight: float,
    reg: RegularizerSpec = RegularizerSpec.zero(),
) -> np.ndarray:
    """Exact minimizer of  model(y) + omega(y) + (weight/2)||y - x||^2.

    Closed forms:
      subgradient : prox_{omega/weight}(x - g/weight); soft-thresholding for l1
      prox_linear : step of length min(|c|, ||g||^2/weight) / ||g||^2 along -sign(c) g
      truncated   : x - lam * g / weight with lam = clip(weight (c - lb)/||g||^2, 0, 1)

    The l1 regularizer composes in closed form only with the subgradient
    model; other combinations are rejected.
    """
    if not (weight > 0.0 and np.isfinite(weight)):
        raise ConfigurationError("weight must be positive and finite")
    x = np.asarray(x, dtype=float)
    if reg.kind == "l1" and model.tag != SUBGRADIENT:
        raise ConfigurationError("l1 regularizer is supported with the subgradient model only")

    with np.errstate(over="ignore", invalid="ignore"):
        if model.tag == SUBGRADIENT:
            y = x - ev.g / weight
            if reg.kind == "l1":
                y = soft_threshold(y, reg.mu / weight)
            return y

        gsq = float(np.dot(ev.g, ev.g))
        if model.tag == PROX_LINEAR:
            if gsq == 0.0:
                return x.copy()  # model is constant; x is stationary for it
            t = min(abs(ev.c), gsq / weight) * float(np.sign(ev.c)) / gsq
            return x - t * ev.g

        if model.tag == TRUNCATED:
            if gsq == 0.0 or ev.c <= model.lower_bound:
                return x.copy()
            lam = min(1.0, weight * (ev.c - model.lower_bound) / gsq)
            return x - (lam / weight) * ev.g

    raise ConfigurationError(f"unknown model tag {model.tag!r}")


def composite_objective(
    model: ModelKind,
    ev: ModelEval,
    x: np.ndarray,
    y: np.ndarray,
    weight: float,
    reg: RegularizerSpec = RegularizerSpec.zero(),
) -> float:
    """Value of the prox subproblem objective at y; used by optimality audits."""
    d = y - x
    return model_value(model, ev, x, y) + reg.value(y) + 0.5 * weight * float(np.dot(d, d))
