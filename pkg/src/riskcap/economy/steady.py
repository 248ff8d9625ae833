"""Deterministic (shock-free) stationary point of the detrended economy.

With all shocks at zero the model has a closed-form steady state: employment
is one by construction of the labor-disutility scales, wage inflation is one,
price inflation zero, the capital price is one, and the capital stock follows
from the shock-free return condition r = 1/(beta(1-xi)) - 1.  Group wealth
shares are anchored at their transfer-share targets; per-capita positions then
follow from stationarity of the wealth-share law.

The steady state serves three purposes: it pins the per-group disutility
scales (zero labor wedge at l = 1), provides the default policy-rate
intercept, and centres the solver grids and initial guesses.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class SteadyState:
    r: float               # shock-free real rate
    k: float               # detrended capital stock
    y: float
    w: float
    ell: float
    q: float
    c: np.ndarray          # per-capita consumption by group
    n: np.ndarray          # per-capita end-of-period savings by group
    k_i: np.ndarray        # per-capita capital by group
    b_i: np.ndarray        # per-capita (consolidated) bond position by group
    shares: np.ndarray     # wealth shares by group
    V: np.ndarray          # detrended value by group
    mu: np.ndarray         # survivor/average wealth ratio by group
    dividend: float        # scaled dividend per unit of effective capital
    cap_payoff: float      # aggregate financial payoff (dividend + resale)

    @property
    def i_nominal(self) -> float:
        """Policy rate consistent with zero steady-state inflation."""
        return self.r


def deterministic_steady(cal) -> SteadyState:
    from .preferences import ez_value_steady, phi_disutility

    r = 1.0 / (cal.beta * (1.0 - cal.xi)) - 1.0
    k = (cal.alpha / (r + cal.delta)) ** (1.0 / (1.0 - cal.alpha))
    y = k**cal.alpha
    w = (1.0 - cal.alpha) * y
    dividend = cal.alpha * y / k
    cap_payoff = (dividend + (1.0 - cal.delta)) * k  # q = 1
    tr = cal.tau * (1.0 - cal.alpha) * y

    lam = cal.lam
    shares = cal.nu.copy()
    shares = shares / shares.sum()
    s_bar = cal.s_bar

    # stationarity of the share law: s = lam (1-xi)(1+r) n / cap_payoff + xi s_bar
    n = (shares - cal.xi * s_bar) * cap_payoff / (lam * (1.0 - cal.xi) * (1.0 + r))

    # portfolio split: constrained groups at their floors, remaining capital
    # allocated to the largest unconstrained group (returns are equalized at
    # the deterministic point, so the split is a centring device only)
    k_i = np.zeros(cal.n_groups)
    floor_total = 0.0
    uncon = []
    for j, g in enumerate(cal.groups):
        if g.mode == "capital-floor":
            k_i[j] = g.k_floor
            floor_total += g.lam * g.k_floor
        else:
            uncon.append(j)
    if not uncon:
        raise ValueError("need at least one group with a free capital choice")
    resid = k - floor_total
    if resid <= 0:
        raise ValueError("capital floors exceed the steady-state capital stock")
    lam_u = sum(lam[j] for j in uncon)
    for j in uncon:
        k_i[j] = resid / lam_u
    b_i = n - k_i

    c = (1.0 - cal.tau) * cal.phi_labor * w + shares * cap_payoff / lam + tr - n
    if np.any(c <= 0):
        raise ValueError(f"nonpositive steady-state consumption: {c}")

    # survivor/average wealth ratio and the value recursion fixed point
    payoff = (1.0 + r) * n
    avg = (1.0 - cal.xi) * payoff + cal.xi * s_bar * cap_payoff / lam
    mu = payoff / avg
    Phi = phi_disutility(cal.phi_labor * 1.0, cal.theta_bar, cal.psi, cal.theta)
    V = ez_value_steady(c * Phi, mu, cal.beta, cal.psi)

    return SteadyState(
        r=r, k=float(k), y=float(y), w=float(w), ell=1.0, q=1.0,
        c=c, n=n, k_i=k_i, b_i=b_i, shares=shares, V=V, mu=mu,
        dividend=float(dividend), cap_payoff=float(cap_payoff),
    )


def risk_adjusted_intercept(cal, quad=None) -> float:
    """Closed-form bond-rate anchor with shocks priced at constant policies.

    Freezes detrended quantities at the shock-free point and prices a
    one-period nominal bond with the pooled-risk-aversion kernel; the
    resulting rate is a good policy-rule intercept initializer (the full
    zero-mean-inflation refit is a solve-time loop).
    """
    from .shocks import build_quadrature

    if quad is None:
        quad = build_quadrature(cal)
    gamma = float(cal.lam.sum() / np.sum(cal.lam / cal.gammas))
    p_mean = cal.p_bar * np.exp(cal.sigma_p**2 / (2.0 * (1.0 - cal.rho_p**2)))
    wts = quad.weights(p_mean)
    g = np.exp(quad.eps_z + quad.phi)
    ce = np.sum(wts * g ** (1.0 - gamma)) ** (1.0 / (1.0 - gamma))
    kernel = g ** (-1.0 / cal.psi) * (g / ce) ** (1.0 / cal.psi - gamma)
    return float(1.0 / (cal.beta * (1.0 - cal.xi) * np.sum(wts * kernel)) - 1.0)


def fit_group_scales(cal):
    """Return a copy of ``cal`` with disutility scales and rate intercept set.

    The per-group scale theta_bar^i = ((eps-1)/eps) (phi^i)^{-1/theta} makes
    the wage-setting block's static condition hold group by group at l = 1
    with zero wage inflation, so l = 1 is the exact shock-free employment
    level.  The policy intercept defaults to the shock-free real rate (zero
    steady-state inflation); risk-adjusted refits are done at solve time.
    """
    markup = (cal.epsilon_elast - 1.0) / cal.epsilon_elast
    groups = tuple(
        replace(g, theta_bar=markup * g.phi_labor ** (-1.0 / cal.theta))
        for g in cal.groups
    )
    cal = cal.with_groups(groups)
    r = 1.0 / (cal.beta * (1.0 - cal.xi)) - 1.0
    return cal.with_(taylor_intercept=r)
