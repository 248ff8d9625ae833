"""Independent one-agent reference solver.

A deliberately separate, compact implementation of the representative-agent
economy: its own residual assembly and a plain damped time iteration with
fresh-Jacobian Newton at every node.  It shares only the numerics layer
(grid, quadrature, interpolation) with the main solver so that both
discretize the identical fixed-point problem; agreement between the two is
a correctness check on the multi-group machinery, not on the basis.
"""

from __future__ import annotations

import time

import numpy as np

from ..economy.preferences import (certainty_equivalent, ez_value_update,
                                   phi_disutility)
from ..economy.shocks import build_quadrature, p_next
from ..economy.steady import deterministic_steady
from ..economy.within import RuleParams
from ..numerics import fit_eval, newton_batched
from .surfaces import PolicySurface

__all__ = ["solve_rank_reference", "rank_steady_state"]


def rank_steady_state(cal):
    """Closed-form shock-free stationary point of the one-agent economy."""
    if len(cal.groups) != 1:
        raise ValueError("reference solver expects a single-group calibration")
    r = 1.0 / (cal.beta * (1.0 - cal.xi)) - 1.0
    k = (cal.alpha / (r + cal.delta)) ** (1.0 / (1.0 - cal.alpha))
    y = k**cal.alpha
    w = (1.0 - cal.alpha) * y
    div = cal.alpha * y / k
    fw = (div + (1.0 - cal.delta)) * k
    income = (1.0 - cal.tau) * w + fw + cal.tau * (1.0 - cal.alpha) * y
    c = income - cal.delta * k - (fw / (1.0 + r) - k)  # = y - delta k
    return {"r": r, "k": k, "y": y, "w": w, "c": y - cal.delta * k,
            "ell": 1.0, "q": 1.0, "pi": 0.0, "piW": 1.0}


class _RankSystem:
    """Residuals of the one-agent within-period system on a state batch."""

    def __init__(self, cal, quad, rule):
        self.cal = cal
        self.quad = quad
        self.rule = rule
        g = cal.groups[0]
        self.gamma = g.gamma
        self.theta_bar = float(cal.theta_bar[0])
        self.icpt = (cal.taylor_intercept if rule.intercept is None
                     else rule.intercept)

    def cphi(self, c, ell):
        return c * phi_disutility(ell, self.theta_bar, self.cal.psi,
                                  self.cal.theta)

    def evaluate(self, X, states, cont):
        cal, quad = self.cal, self.quad
        piW, pi = X[:, 0], X[:, 1]
        c, k_next = np.exp(X[:, 2]), np.exp(X[:, 3])
        i = X[:, 4]
        kh, w_lag = states[:, 0], states[:, 1]
        p_state, m_state = states[:, 2], states[:, 3]

        w = w_lag * piW / (1.0 + pi)
        ell = ((1.0 - cal.alpha) * kh**cal.alpha / w) ** (1.0 / cal.alpha)
        y = ell ** (1.0 - cal.alpha) * kh**cal.alpha
        q = (k_next / kh) ** cal.chi_x
        x_inv = k_next - (1.0 - cal.delta) * kh
        div = cal.alpha * y / kh
        ac = 0.5 * cal.chi_W * (piW - 1.0) ** 2 * w * ell
        fw = (div + (1.0 - cal.delta) * q) * kh
        income = (1.0 - cal.tau) * w * ell - ac + fw \
            + cal.tau * (1.0 - cal.alpha) * y
        b = income - c - q * k_next

        growth = np.exp(quad.eps_z + quad.phi)[None, :]
        pts = np.empty((states.shape[0] * quad.n_nodes, 4))
        pts[:, 0] = (kh[:, None] * (k_next / kh)[:, None]
                     / np.exp(quad.eps_z)[None, :]).ravel()
        pts[:, 1] = (w[:, None] / np.exp(quad.eps_z)[None, :]).ravel()
        pts[:, 2] = p_next(cal, p_state[:, None], quad.eps_p[None, :]).ravel()
        pts[:, 3] = 1.0
        raw, _ = cont.eval(pts, extrapolate="clamp")
        raw = raw.reshape(states.shape[0], quad.n_nodes, 6)
        V_n = np.exp(np.clip(raw[:, :, 0], -60, 60))
        c_n = np.exp(np.clip(raw[:, :, 1], -60, 60))
        pi_n, piW_n = raw[:, :, 2], raw[:, :, 3]
        q_n = np.exp(np.clip(raw[:, :, 4], -60, 60))
        ell_n = np.exp(np.clip(raw[:, :, 5], -60, 60))

        kh_n = k_next[:, None] / np.exp(quad.eps_z)[None, :]
        y_n = ell_n ** (1.0 - cal.alpha) * kh_n**cal.alpha
        div_n = cal.alpha * y_n / kh_n
        cap_unit = (div_n + (1.0 - cal.delta) * q_n) * np.exp(quad.phi)[None, :]
        pay = ((1.0 + i)[:, None] * b[:, None] / ((1.0 + pi_n) * growth)
               + cap_unit * k_next[:, None])
        cap_total = cap_unit * k_next[:, None]
        mu = pay / ((1.0 - cal.xi) * pay + cal.xi * cap_total)
        mu = np.clip(mu, 1e-8, None)

        v_hat = mu * V_n * growth
        v_hat = np.maximum(v_hat, 1e-300)
        wts = quad.weights(p_state)
        ce = certainty_equivalent(v_hat, wts, self.gamma)
        cphi_now = self.cphi(c, ell)
        cphi_next = c_n * phi_disutility(ell_n, self.theta_bar, cal.psi,
                                         cal.theta)
        m_kern = (cphi_next * growth / cphi_now[:, None]) ** (-1.0 / cal.psi) \
            * (v_hat / ce[:, None]) ** (1.0 / cal.psi - self.gamma)

        res = np.empty_like(X)
        res[:, 0] = (c + q * x_inv + ac - y) / y
        wedge = self.theta_bar * ell ** (1.0 / cal.theta) * ell
        fwd = cal.beta * cal.chi_W * np.sum(
            wts * (c[:, None] / c_n) * piW_n * (piW_n - 1.0)
            * ell_n / ell[:, None], axis=1)
        res[:, 1] = (cal.chi_W * piW * (piW - 1.0) - (1.0 - cal.epsilon_elast)
                     - cal.epsilon_elast * wedge - fwd) / cal.epsilon_elast
        e_bond = np.sum(wts * m_kern / (1.0 + pi_n), axis=1)
        res[:, 2] = 1.0 - cal.beta * (1.0 - cal.xi) * (1.0 + i) * e_bond
        gross_k = cap_unit * growth / q[:, None]
        gross_b = (1.0 + i)[:, None] / (1.0 + pi_n)
        e_m = np.sum(wts * m_kern, axis=1)
        res[:, 3] = np.sum(wts * m_kern * (gross_k - gross_b), axis=1) / e_m
        log_target = (np.log1p(self.icpt) + self.rule.phi_pi * np.log1p(pi)
                      + np.log(m_state))
        res[:, 4] = (1.0 + i) / np.exp(log_target) - 1.0

        V_new = ez_value_update(cphi_now, ce, cal.beta, cal.psi)
        out = {"V": V_new, "c": c, "pi": pi, "piW": piW, "q": q, "ell": ell,
               "k_next": k_next, "b": b, "i": i, "w": w, "y": y,
               "mu": mu, "growth": growth, "wts": wts, "cap_unit": cap_unit}
        return res, out


def solve_rank_reference(cal, rule, grid, *, quad=None, damp: float = 0.3,
                         step_cap: float = 0.05, tol: float = 1e-6,
                         max_sweeps: int = 3000, value_steps: int = 60,
                         cont0=None, verbose: bool = False):
    """Time iteration of the one-agent economy; returns a PolicySurface."""
    t0 = time.perf_counter()
    quad = quad if quad is not None else build_quadrature(cal)
    rule = rule if rule is not None else RuleParams()
    sys_ = _RankSystem(cal, quad, rule)
    states = grid.points()
    N = states.shape[0]
    ss = rank_steady_state(cal)
    dss = deterministic_steady(cal)

    names = ["log_V_0", "log_c_0", "pi", "piW", "log_q", "log_l"]
    if cont0 is None:
        vals = np.vstack([
            np.full(N, np.log(dss.V[0])), np.full(N, np.log(ss["c"])),
            np.zeros(N), np.ones(N), np.zeros(N), np.zeros(N)])
        cont = fit_eval(grid, vals, names)
    else:
        cont = cont0

    X = np.empty((N, 5))
    X[:, 0], X[:, 1] = 1.0, 0.0
    X[:, 2] = np.log(ss["c"])
    X[:, 3] = np.log(states[:, 0])
    X[:, 4] = sys_.icpt

    packed_old = cont.eval(states)[0].T
    converged = False
    change = np.inf
    for sweep in range(1, max_sweeps + 1):
        def fn(Z):
            return sys_.evaluate(Z, states, cont)[0]

        X, ok, sup = newton_batched(fn, X, tol=1e-11, max_iter=30)
        _, out = sys_.evaluate(X, states, cont)

        V = out["V"]
        for _ in range(value_steps):
            itp = fit_eval(grid, np.log(V)[None, :])
            pts = np.empty((N * quad.n_nodes, 4))
            pts[:, 0] = (out["k_next"][:, None]
                         / np.exp(quad.eps_z)[None, :]).ravel()
            pts[:, 1] = (out["w"][:, None]
                         / np.exp(quad.eps_z)[None, :]).ravel()
            pts[:, 2] = p_next(cal, states[:, 2][:, None],
                               quad.eps_p[None, :]).ravel()
            pts[:, 3] = 1.0
            logv, _ = itp.eval(pts, extrapolate="clamp")
            v_hat = out["mu"] * np.exp(logv).reshape(N, quad.n_nodes) \
                * out["growth"]
            ce = certainty_equivalent(np.maximum(v_hat, 1e-300),
                                      out["wts"], sys_.gamma)
            V = ez_value_update(sys_.cphi(out["c"], out["ell"]), ce,
                                cal.beta, cal.psi)

        packed_new = np.vstack([np.log(V), np.log(out["c"]), out["pi"],
                                out["piW"], np.log(out["q"]),
                                np.log(out["ell"])])
        change = float(np.max(np.abs(packed_new - packed_old)))
        packed_old = packed_old + np.clip(damp * (packed_new - packed_old),
                                          -step_cap, step_cap)
        cont = fit_eval(grid, packed_old, names)
        if verbose and sweep % 25 == 0:
            print(f"  ref sweep {sweep:4d} change {change:.3e} "
                  f"inner {sup:.1e}")
        if change < tol:
            converged = True
            break

    X, ok, sup = newton_batched(lambda Z: sys_.evaluate(Z, states, cont)[0],
                                X, tol=1e-12, max_iter=50)
    _, out = sys_.evaluate(X, states, cont)
    extra = np.vstack([np.log(out["k_next"]), out["b"], out["i"],
                       np.log(out["w"]), np.log(out["y"]), np.zeros(N)])
    meta = {"iterations": sweep, "converged": bool(converged),
            "final_change": change, "final_inner_residual": float(sup),
            "wall_time_s": time.perf_counter() - t0}
    return PolicySurface(
        regime="taylor", cal=cal, grid=grid, cont=cont,
        extra=fit_eval(grid, extra, ["log_k_0", "b_0", "i", "log_w", "log_y",
                                     "planner_value"]),
        rule=rule, meta=meta)
