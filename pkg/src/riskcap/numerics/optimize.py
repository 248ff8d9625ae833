"""Derivative-free optimization: GP-surrogate global search + golden section.

``minimize_derivative_free`` follows the surrogate-assisted recipe used for
the rule search: a space-filling random initialization, then sequential
expected-improvement acquisition on a Gaussian-process surrogate (RBF kernel,
small length-scale grid refit each round), with a Nelder-Mead polish of the
incumbent on the tail of the budget.  Fully deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import minimize
from scipy.special import erf


@dataclass
class OptimizeTrace:
    x: np.ndarray          # (n_eval, d)
    f: np.ndarray          # (n_eval,)
    best_x: np.ndarray
    best_f: float
    n_discarded: int = 0


def _norm_cdf(z):
    return 0.5 * (1.0 + erf(z / math.sqrt(2.0)))


def _norm_pdf(z):
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


class _GP:
    """Minimal RBF-kernel GP on the unit box with fixed signal/noise scales."""

    def __init__(self, X, y, length):
        self.X = X
        self.ymean = y.mean()
        self.ystd = y.std() + 1e-12
        self.y = (y - self.ymean) / self.ystd
        self.length = length
        K = self._k(X, X) + 1e-8 * np.eye(X.shape[0])
        self.L = np.linalg.cholesky(K)
        self.alpha = np.linalg.solve(self.L.T, np.linalg.solve(self.L, self.y))

    def _k(self, A, B):
        d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(-1)
        return np.exp(-0.5 * d2 / self.length**2)

    def loglik(self):
        return float(-0.5 * self.y @ self.alpha - np.log(np.diag(self.L)).sum())

    def predict(self, Z):
        Ks = self._k(Z, self.X)
        mu = Ks @ self.alpha
        v = np.linalg.solve(self.L, Ks.T)
        var = np.maximum(1.0 - (v**2).sum(0), 1e-12)
        return mu * self.ystd + self.ymean, np.sqrt(var) * self.ystd


def minimize_derivative_free(objective, bounds, budget: int, seed: int,
                             n_init: int | None = None) -> OptimizeTrace:
    """Global minimization of a black-box objective on a box.

    Non-finite objective values are discarded (logged in the trace) and do
    not enter the surrogate.
    """
    if budget < 10:
        raise ValueError("budget must be >= 10")
    bounds = np.asarray(bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    d = bounds.shape[0]
    rng = np.random.default_rng(seed)
    if n_init is None:
        n_init = max(10, min(50, budget // 6))
    n_polish = min(max(budget // 4, 20), budget - n_init - 10) if budget > 60 else 0
    n_seq = budget - n_init - n_polish

    X, F = [], []
    n_disc = 0

    def record(x):
        nonlocal n_disc
        f = objective(np.asarray(x, dtype=float))
        if not np.isfinite(f):
            n_disc += 1
            return None
        X.append(np.asarray(x, dtype=float))
        F.append(float(f))
        return f

    # space-filling initialization: stratified (Latin hypercube) sample
    perm = np.column_stack([rng.permutation(n_init) for _ in range(d)])
    U = (perm + rng.uniform(size=(n_init, d))) / n_init
    for u in U:
        record(lo + u * (hi - lo))

    for _ in range(n_seq):
        Xa = (np.array(X) - lo) / (hi - lo)
        Fa = np.array(F)
        # refit length scale on a small grid by marginal likelihood
        best_gp, best_ll = None, -np.inf
        for ell in (0.1, 0.2, 0.4, 0.8):
            gp = _GP(Xa, Fa, ell)
            ll = gp.loglik()
            if ll > best_ll:
                best_gp, best_ll = gp, ll
        # candidate set: global uniform + local perturbations of incumbents
        n_cand = 1024
        cand = rng.uniform(size=(n_cand, d))
        order = np.argsort(Fa)
        k = min(5, len(order))
        local = Xa[order[:k], None, :] + 0.05 * rng.standard_normal((k, 40, d))
        cand = np.clip(np.vstack([cand, local.reshape(-1, d)]), 0.0, 1.0)
        mu, sd = best_gp.predict(cand)
        fbest = Fa.min()
        z = (fbest - mu) / sd
        ei = (fbest - mu) * _norm_cdf(z) + sd * _norm_pdf(z)
        record(lo + cand[int(np.argmax(ei))] * (hi - lo))

    # local polish of the incumbent with the remaining budget
    if n_polish > 0 and X:
        x0 = X[int(np.argmin(F))]
        count = [0]

        def capped(x):
            if count[0] >= n_polish:
                return np.inf
            count[0] += 1
            xc = np.clip(x, lo, hi)
            f = objective(xc)
            if np.isfinite(f):
                X.append(xc.copy())
                F.append(float(f))
                return f
            return np.inf

        minimize(capped, x0, method="Nelder-Mead",
                 options={"maxfev": n_polish, "xatol": 1e-10, "fatol": 1e-12})

    Fa = np.array(F)
    Xa = np.array(X)
    ib = int(np.argmin(Fa))
    return OptimizeTrace(Xa, Fa, Xa[ib].copy(), float(Fa[ib]), n_disc)


def golden_section(fn, a: float, b: float, tol: float = 1e-8,
                   max_iter: int = 200) -> tuple[float, float]:
    """Minimize a unimodal scalar function on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    dd = a + invphi * (b - a)
    fc, fd = fn(c), fn(dd)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc < fd:
            b, dd, fd = dd, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, dd, fd
            dd = a + invphi * (b - a)
            fd = fn(dd)
    x = c if fc < fd else dd
    return float(x), float(min(fc, fd))
