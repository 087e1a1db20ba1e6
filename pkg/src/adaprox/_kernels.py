"""Compiled inner loops for the stochastic solvers.

Private module: integer codes mirror the string vocabulary of `models`,
`stepsize` and `problems`; the public wrappers translate and validate.
All arithmetic is plain float64 with a fixed evaluation order so runs are
bit-reproducible.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LOSS_R1 = 0
LOSS_R2 = 1
LOSS_R3 = 2
LOSS_LAD = 3
LOSS_LS = 4

MODEL_SUBGRADIENT = 0
MODEL_PROX_LINEAR = 1
MODEL_TRUNCATED = 2

POLICY_CONSTANT = 0
POLICY_GROWTH = 1
POLICY_REFERENCE = 2

MODE_SQRT_HORIZON = 0
MODE_POLY_ITER = 1
MODE_PLAIN = 2

REG_ZERO = 0
REG_L1 = 1

STATUS_RAN = 0
STATUS_CONVERGED = 1
STATUS_DIVERGED = 2

_EXP_MAX = 700.0  # exp argument guard; beyond this the result is treated as inf


@njit(cache=True)
def _row_dot(A, i, x):
    u = 0.0
    for j in range(x.shape[0]):
        u += A[i, j] * x[j]
    return u


@njit(cache=True)
def _norm(x):
    s = 0.0
    for j in range(x.shape[0]):
        s += x[j] * x[j]
    return np.sqrt(s)


@njit(cache=True)
def _loss_terms(loss, u, bi):
    """Return (f, res, dr): loss value, signed residual, curve derivative."""
    if loss == LOSS_R1:
        res = u * u - bi
        return abs(res), res, 2.0 * u
    if loss == LOSS_R2:
        u2 = u * u
        res = u2 * u2 * u + u2 * u + 1.0 - bi
        return abs(res), res, 5.0 * u2 * u2 + 3.0 * u2
    if loss == LOSS_R3:
        if u > _EXP_MAX:
            return np.inf, np.inf, np.inf
        e = np.exp(u)
        res = e + 10.0 - bi
        return abs(res), res, e
    if loss == LOSS_LAD:
        res = u - bi
        return abs(res), res, 1.0
    res = u - bi
    return res * res, res, 1.0


@njit(cache=True)
def _full_objective(A, b, x, loss):
    m = A.shape[0]
    acc = 0.0
    for i in range(m):
        u = _row_dot(A, i, x)
        f, _, _ = _loss_terms(loss, u, b[i])
        acc += f
    return acc / m


@njit(cache=True)
def _growth_value(loss, s):
    if loss == LOSS_R1:
        return s
    if loss == LOSS_R2:
        return 5.0 * (s**4 + s**2)
    if loss == LOSS_R3:
        if 3.0 * s > _EXP_MAX:
            return np.inf
        return np.exp(3.0 * s)
    if loss == LOSS_LAD:
        return 1.0
    return s


@njit(cache=True)
def _lip_at(A, b, anorm, i, x, loss, model):
    """Model Lipschitz constant at anchor x from sample i."""
    u = _row_dot(A, i, x)
    f, res, dr = _loss_terms(loss, u, b[i])
    if not np.isfinite(f):
        return np.inf
    if loss == LOSS_LS:
        return abs(2.0 * res) * anorm[i]
    if model == MODEL_PROX_LINEAR:
        return abs(dr) * anorm[i]
    sgn = 0.0
    if res > 0.0:
        sgn = 1.0
    elif res < 0.0:
        sgn = -1.0
    return abs(sgn * dr) * anorm[i]


@njit(cache=True)
def run_chain(
    A,
    b,
    anorm,
    x,
    idx_upd,
    idx_ref,
    loss,
    model,
    policy,
    mode,
    reg,
    rho,
    kappa,
    tau,
    alpha,
    theta,
    zeta,
    mu,
    trunc_lb,
    K,
    m_epoch,
    stop_target,
    has_stop,
    cap,
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
):
    """Run K prox-model iterations in place on x.

    Returns (status, iters_done, nrec, nobj, conv_iter, max_norm).
    """
    n = x.shape[0]
    sqrt_total = np.sqrt(float(K))
    max_norm = _norm(x)
    nrec = 0
    nobj = 0
    rec_cap = rec_k.shape[0]
    obj_cap = obj_vals.shape[0]

    f0 = _full_objective(A, b, x, loss)
    if nobj < obj_cap:
        obj_vals[nobj] = f0
        obj_iters[nobj] = 0
        nobj += 1
    if not np.isfinite(f0) or f0 > cap:
        return STATUS_DIVERGED, 0, nrec, nobj, -1, np.inf
    if has_stop and f0 <= stop_target:
        return STATUS_CONVERGED, 0, nrec, nobj, 0, max_norm

    for k in range(1, K + 1):
        i = idx_upd[k - 1]
        u = _row_dot(A, i, x)
        if not np.isfinite(u) or abs(u) > cap:
            return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf
        f, res, dr = _loss_terms(loss, u, b[i])
        if not np.isfinite(f) or f > cap:
            return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf

        sgn = 0.0
        if res > 0.0:
            sgn = 1.0
        elif res < 0.0:
            sgn = -1.0
        if loss == LOSS_LS:
            gcoef = 2.0 * res
            pl_c = 0.0
            pl_dr = 0.0
            lip = abs(gcoef) * anorm[i]
        elif model == MODEL_PROX_LINEAR:
            gcoef = 0.0
            pl_c = res
            pl_dr = dr
            lip = abs(dr) * anorm[i]
        else:
            gcoef = sgn * dr
            pl_c = 0.0
            pl_dr = 0.0
            lip = abs(gcoef) * anorm[i]
        if not np.isfinite(lip):
            return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf

        norm_x = _norm(x)

        growth = 0.0
        lip_ref = np.nan
        if policy == POLICY_GROWTH:
            growth = _growth_value(loss, norm_x)
            if not np.isfinite(growth):
                return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf
        elif policy == POLICY_REFERENCE:
            lip_ref = _lip_at(A, b, anorm, idx_ref[k - 1], x, loss, model)
            if not np.isfinite(lip_ref):
                return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf

        # regularization weight; formulas must match stepsize.reg_weight
        if mode == MODE_SQRT_HORIZON:
            if policy == POLICY_CONSTANT:
                gamma = rho + kappa + alpha * sqrt_total
            elif policy == POLICY_GROWTH:
                gamma = rho + kappa + tau + alpha * (growth + 1.0) * sqrt_total
            else:
                gamma = rho + tau + kappa + max(lip_ref, alpha) * sqrt_total
        elif mode == MODE_POLY_ITER:
            kz = float(k) ** zeta
            if policy == POLICY_CONSTANT:
                gamma = rho + kappa + alpha * kz
            elif policy == POLICY_GROWTH:
                gamma = rho + kappa + (growth + 1.0) * kz
            else:
                gamma = rho + kappa + tau + max(lip_ref, alpha) * kz
        else:
            if policy == POLICY_CONSTANT:
                gamma = theta * sqrt_total
            elif policy == POLICY_GROWTH:
                gamma = theta * growth * sqrt_total
            else:
                gamma = theta * max(lip_ref, alpha) * sqrt_total
        if not np.isfinite(gamma) or gamma <= 0.0:
            return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf

        recording = (k - 1) % stride == 0 and nrec < rec_cap
        if recording:
            rec_k[nrec] = k
            rec_gamma[nrec] = gamma
            rec_normx[nrec] = norm_x
            rec_lip[nrec] = lip
            rec_lipref[nrec] = lip_ref
            for j in range(n):
                rec_iter[nrec, j] = x[j]

        # prox subproblem step
        step_norm = 0.0
        if model == MODEL_PROX_LINEAR:
            gsq = pl_dr * pl_dr * anorm[i] * anorm[i]
            if gsq > 0.0:
                sgn_c = 0.0
                if pl_c > 0.0:
                    sgn_c = 1.0
                elif pl_c < 0.0:
                    sgn_c = -1.0
                t = min(abs(pl_c), gsq / gamma) * sgn_c / gsq
                sc = t * pl_dr
                for j in range(n):
                    x[j] -= sc * A[i, j]
                step_norm = abs(sc) * anorm[i]
        elif model == MODEL_TRUNCATED:
            gsq = gcoef * gcoef * anorm[i] * anorm[i]
            if gsq > 0.0 and f > trunc_lb:
                lam = min(1.0, gamma * (f - trunc_lb) / gsq)
                sc = lam * gcoef / gamma
                for j in range(n):
                    x[j] -= sc * A[i, j]
                step_norm = abs(sc) * anorm[i]
        else:
            sc = gcoef / gamma
            if reg == REG_L1:
                thr = mu / gamma
                ssq = 0.0
                for j in range(n):
                    v = x[j] - sc * A[i, j]
                    if v > thr:
                        y = v - thr
                    elif v < -thr:
                        y = v + thr
                    else:
                        y = 0.0
                    dlt = y - x[j]
                    ssq += dlt * dlt
                    x[j] = y
                step_norm = np.sqrt(ssq)
            else:
                for j in range(n):
                    x[j] -= sc * A[i, j]
                step_norm = abs(sc) * anorm[i]

        if recording:
            rec_step[nrec] = step_norm
            nrec += 1

        new_norm = _norm(x)
        if not np.isfinite(new_norm) or new_norm > cap:
            return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf
        if new_norm > max_norm:
            max_norm = new_norm

        if k % m_epoch == 0 or k == K:
            fk = _full_objective(A, b, x, loss)
            if nobj < obj_cap:
                obj_vals[nobj] = fk
                obj_iters[nobj] = k
                nobj += 1
            if not np.isfinite(fk) or fk > cap:
                return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf
            if has_stop and fk <= stop_target:
                return STATUS_CONVERGED, k, nrec, nobj, k, max_norm

    return STATUS_RAN, K, nrec, nobj, -1, max_norm


@njit(cache=True)
def radial_root(t, q):
    """Unique r >= 0 with r**(q-1) + r = t, to |residual| <= 1e-13 (1 + t)."""
    if t <= 0.0:
        return 0.0
    if q == 2:
        return 0.5 * t
    hi = t if t < 1.0 else t ** (1.0 / (q - 1.0))
    if hi > t:
        hi = t
    lo = 0.0
    r = hi
    tol = 1e-13 * (1.0 + t)
    for _ in range(200):
        phi = r ** (q - 1) + r - t
        if abs(phi) <= tol:
            return r
        if phi > 0.0:
            hi = r
        else:
            lo = r
        dphi = (q - 1) * r ** (q - 2) + 1.0
        rn = r - phi / dphi
        if rn <= lo or rn >= hi:
            rn = 0.5 * (lo + hi)
        r = rn
    return r


@njit(cache=True)
def run_mirror(
    A,
    b,
    anorm,
    x,
    idx_upd,
    loss,
    q,
    eta,
    K,
    m_epoch,
    stop_target,
    has_stop,
    cap,
    stride,
    rec_k,
    rec_gamma,
    rec_normx,
    rec_lip,
    rec_step,
    rec_iter,
    obj_vals,
    obj_iters,
):
    """Stochastic mirror descent with the radial kernel ||x||^q/q + ||x||^2/2.

    Same trace and stopping semantics as run_chain; rec_gamma stores the
    inverse stepsize 1/eta for uniformity.
    """
    n = x.shape[0]
    z = np.empty(n)
    x_prev = np.empty(n)
    max_norm = _norm(x)
    nrec = 0
    nobj = 0
    rec_cap = rec_k.shape[0]
    obj_cap = obj_vals.shape[0]

    f0 = _full_objective(A, b, x, loss)
    if nobj < obj_cap:
        obj_vals[nobj] = f0
        obj_iters[nobj] = 0
        nobj += 1
    if not np.isfinite(f0) or f0 > cap:
        return STATUS_DIVERGED, 0, nrec, nobj, -1, np.inf
    if has_stop and f0 <= stop_target:
        return STATUS_CONVERGED, 0, nrec, nobj, 0, max_norm

    inv_eta = 1.0 / eta
    for k in range(1, K + 1):
        i = idx_upd[k - 1]
        u = _row_dot(A, i, x)
        if not np.isfinite(u) or abs(u) > cap:
            return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf
        f, res, dr = _loss_terms(loss, u, b[i])
        if not np.isfinite(f) or f > cap:
            return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf
        sgn = 0.0
        if res > 0.0:
            sgn = 1.0
        elif res < 0.0:
            sgn = -1.0
        gcoef = sgn * dr
        lip = abs(gcoef) * anorm[i]

        norm_x = _norm(x)
        recording = (k - 1) % stride == 0 and nrec < rec_cap
        if recording:
            rec_k[nrec] = k
            rec_gamma[nrec] = inv_eta
            rec_normx[nrec] = norm_x
            rec_lip[nrec] = lip
            for j in range(n):
                rec_iter[nrec, j] = x[j]
                x_prev[j] = x[j]

        if q == 2:
            pref = 2.0
        else:
            pref = norm_x ** (q - 2) + 1.0
        if not np.isfinite(pref):
            return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf
        for j in range(n):
            z[j] = pref * x[j] - eta * gcoef * A[i, j]
        t = _norm(z)
        if not np.isfinite(t) or t > cap:
            return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf
        if t == 0.0:
            for j in range(n):
                x[j] = 0.0
        else:
            r = radial_root(t, q)
            scale = r / t
            for j in range(n):
                x[j] = scale * z[j]

        if recording:
            ssq = 0.0
            for j in range(n):
                dlt = x[j] - x_prev[j]
                ssq += dlt * dlt
            rec_step[nrec] = np.sqrt(ssq)
            nrec += 1

        new_norm = _norm(x)
        if not np.isfinite(new_norm) or new_norm > cap:
            return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf
        if new_norm > max_norm:
            max_norm = new_norm

        if k % m_epoch == 0 or k == K:
            fk = _full_objective(A, b, x, loss)
            if nobj < obj_cap:
                obj_vals[nobj] = fk
                obj_iters[nobj] = k
                nobj += 1
            if not np.isfinite(fk) or fk > cap:
                return STATUS_DIVERGED, k, nrec, nobj, -1, np.inf
            if has_stop and fk <= stop_target:
                return STATUS_CONVERGED, k, nrec, nobj, k, max_norm

    return STATUS_RAN, K, nrec, nobj, -1, max_norm
