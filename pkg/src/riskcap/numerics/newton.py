"""Damped Newton solvers with finite-difference Jacobians.

Two entry points:

``newton_damped``  — single system F(x) = 0, step halving on residual
increase (floor 1/64), singular-Jacobian retry with a diagonal perturbation.

``newton_batched`` — many independent small systems stacked along a leading
axis, solved simultaneously with per-system damping; this is what the global
solver uses across grid points within a sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DAMP_FLOOR = 1.0 / 64.0


@dataclass
class SolveReport:
    x: np.ndarray
    converged: bool
    iterations: int
    residual_norm: float
    message: str = ""
    trace: list = field(default_factory=list)


def _fd_jacobian(fn, x, f0, h=1e-7):
    n = x.size
    J = np.empty((n, n))
    for j in range(n):
        step = h * max(1.0, abs(x[j]))
        xp = x.copy()
        xp[j] += step
        J[:, j] = (fn(xp) - f0) / step
    return J


def newton_damped(residual_fn, x0, tol: float = 1e-10, max_iter: int = 60,
                  fd_step: float = 1e-7) -> SolveReport:
    """Solve residual_fn(x) = 0. Accepts a step only if ||F||_inf decreases."""
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    f = np.atleast_1d(residual_fn(x))
    norm = np.max(np.abs(f))
    trace = [norm]
    for it in range(1, max_iter + 1):
        if norm < tol:
            return SolveReport(x, True, it - 1, norm, "converged", trace)
        J = _fd_jacobian(lambda v: np.atleast_1d(residual_fn(v)), x, f, fd_step)
        try:
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            J = J + 1e-8 * np.eye(x.size) * max(1.0, np.abs(np.diag(J)).max())
            try:
                dx = np.linalg.solve(J, -f)
            except np.linalg.LinAlgError:
                return SolveReport(x, False, it, norm, "singular Jacobian", trace)
        lam = 1.0
        while True:
            x_try = x + lam * dx
            f_try = np.atleast_1d(residual_fn(x_try))
            norm_try = np.max(np.abs(f_try)) if np.all(np.isfinite(f_try)) else np.inf
            if norm_try < norm:
                x, f, norm = x_try, f_try, norm_try
                break
            lam *= 0.5
            if lam < DAMP_FLOOR:
                return SolveReport(x, norm < tol, it, norm,
                                   "stalled: damping floor reached", trace)
        trace.append(norm)
    return SolveReport(x, norm < tol, max_iter, norm,
                       "iteration budget exhausted" if norm >= tol else "converged",
                       trace)


def newton_batched(residual_fn, X0, tol: float = 1e-10, max_iter: int = 40,
                   fd_step: float = 1e-7):
    """Solve M independent n-dim systems stacked as X (M, n).

    residual_fn maps (M, n) -> (M, n) and must be evaluable on any subset
    pattern (it is always called with the full stack; converged rows are
    simply frozen).  Returns (X, converged_mask, sup_residual).
    """
    X = np.array(X0, dtype=float)
    M, n = X.shape
    F = residual_fn(X)
    norm = np.max(np.abs(F), axis=1)
    for _ in range(max_iter):
        active = norm >= tol
        if not active.any():
            break
        J = np.empty((M, n, n))
        for j in range(n):
            step = fd_step * np.maximum(1.0, np.abs(X[:, j]))
            Xp = X.copy()
            Xp[:, j] += step
            J[:, :, j] = (residual_fn(Xp) - F) / step[:, None]
        dX = np.zeros_like(X)
        try:
            dX[active] = np.linalg.solve(J[active], -F[active][..., None])[..., 0]
        except np.linalg.LinAlgError:
            Jr = J[active] + 1e-9 * np.eye(n)
            dX[active] = np.linalg.solve(Jr, -F[active][..., None])[..., 0]
        lam = np.where(active, 1.0, 0.0)
        best_norm = norm.copy()
        for _ in range(7):  # damping sweeps down to 1/64 with early exit
            X_try = X + lam[:, None] * dX
            F_try = residual_fn(X_try)
            norm_try = np.max(np.abs(F_try), axis=1)
            norm_try = np.where(np.isfinite(norm_try), norm_try, np.inf)
            improved = active & (norm_try < best_norm)
            X = np.where(improved[:, None], X_try, X)
            F = np.where(improved[:, None], F_try, F)
            best_norm = np.where(improved, norm_try, best_norm)
            lam = np.where(improved, 0.0, lam * 0.5)  # done rows stop moving
            if not (lam > DAMP_FLOOR / 2).any():
                break
        norm = best_norm
    return X, norm < tol, float(np.max(norm))
