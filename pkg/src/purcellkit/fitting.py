"""Small damped (Levenberg-Marquardt) least-squares core.

Used by the S21 spectrum fit and the reset-curve fit. Steps are only
accepted when they reduce the residual sum of squares, so the cost is
non-increasing across accepted iterations by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LeastSquaresResult:
    params: np.ndarray
    converged: bool
    iterations: int
    residual: np.ndarray
    cost: float
    std_errors: np.ndarray

    @property
    def residual_rms(self) -> float:
        return float(np.sqrt(np.mean(self.residual**2)))


def _jacobian(fn, p, r0, x_scale):
    m, n = r0.size, p.size
    jac = np.empty((m, n))
    for i in range(n):
        h = 1e-7 * max(abs(p[i]), x_scale[i])
        dp = np.array(p)
        dp[i] += h
        jac[:, i] = (fn(dp) - r0) / h
    return jac


def levenberg_marquardt(
    fn,
    p0,
    max_iter: int = 500,
    step_tol: float = 1e-8,
    cost_tol: float = 1e-10,
    x_scale=None,
    lam0: float = 1e-3,
):
    """Minimize sum(fn(p)**2) starting from p0.

    fn maps a parameter vector to a residual vector. x_scale gives a
    typical magnitude per parameter (used for finite-difference steps and
    the relative step-size convergence test); defaults to |p0| with a floor
    of 1.

    Convergence is declared when the relative step falls below step_tol or
    the cost change over an accepted iteration falls below cost_tol.
    """
    p = np.asarray(p0, dtype=float).copy()
    x_scale = (
        np.maximum(np.abs(p), 1.0)
        if x_scale is None
        else np.asarray(x_scale, dtype=float)
    )
    r = np.asarray(fn(p), dtype=float)
    cost = float(r @ r)
    lam = lam0
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        jac = _jacobian(fn, p, r, x_scale)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        accepted = False
        for _ in range(50):
            damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-30))
            try:
                step = np.linalg.solve(damped, -jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_new = p + step
            r_new = np.asarray(fn(p_new), dtype=float)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        rel_step = float(np.max(np.abs(step) / x_scale))
        cost_drop = cost - cost_new
        p, r, cost = p_new, r_new, cost_new
        lam = max(lam / 3.0, 1e-14)
        if rel_step < step_tol or cost_drop < cost_tol:
            converged = True
            break

    std = _standard_errors(fn, p, r, x_scale)
    return LeastSquaresResult(p, converged, iterations, r, cost, std)


def _standard_errors(fn, p, r, x_scale):
    m, n = r.size, p.size
    if m <= n:
        return np.full(n, np.nan)
    jac = _jacobian(fn, p, r, x_scale)
    try:
        cov = np.linalg.inv(jac.T @ jac) * (r @ r) / (m - n)
    except np.linalg.LinAlgError:
        return np.full(n, np.nan)
    diag = np.clip(np.diag(cov), 0.0, None)
    return np.sqrt(diag)
