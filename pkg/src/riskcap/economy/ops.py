"""Named equilibrium-condition operations on states and period variables.

Thin, documented entry points over the vectorized block evaluator: realized
returns, the household discount kernel, residual views grouped by economic
block, the wealth-share transition, the policy-rate composition, and the
marginal-risk-capacity statistic measured on a solved policy surface.
"""

from __future__ import annotations

import numpy as np

from .preferences import phi_disutility
from .shocks import build_quadrature
from .within import RuleParams, WithinBlock

__all__ = [
    "returns", "sdf", "household_residuals", "supply_residuals",
    "wealth_share_step", "policy_rate", "gamma_bar_raw", "mrc_at_state",
]


def returns(cal, prev_q, q, dividend, i_prev, pi, disaster_factor=1.0):
    """Realized net returns (capital, bonds) between two consecutive periods.

    ``disaster_factor`` is e^{phi} for the realized disaster outcome (1 when
    none occurred); it scales the surviving capital value.
    """
    prev_q = np.asarray(prev_q, dtype=float)
    if np.any(prev_q <= 0.0):
        raise ValueError("capital price must be positive")
    r_k = (np.asarray(dividend) + (1.0 - cal.delta) * np.asarray(q)) \
        / prev_q * disaster_factor - 1.0
    r = (1.0 + np.asarray(i_prev)) / (1.0 + np.asarray(pi)) - 1.0
    return r_k, r


def sdf(cal, group, c_now, c_next, l_now, l_next, v_next, certainty_equiv):
    """One-period discount kernel of a household group.

    Labor enters through the balanced-growth disutility wrapper; the second
    factor collapses to one either when gamma = 1/psi or when next period is
    deterministic (v_next equals its certainty equivalent).
    """
    v_next = np.asarray(v_next, dtype=float)
    if np.any(v_next <= 0.0):
        raise ValueError("value function must be positive")
    g = cal.groups[group]
    cphi_now = np.asarray(c_now) * phi_disutility(
        g.phi_labor * np.asarray(l_now), g.theta_bar, cal.psi, cal.theta)
    cphi_next = np.asarray(c_next) * phi_disutility(
        g.phi_labor * np.asarray(l_next), g.theta_bar, cal.psi, cal.theta)
    m = cal.beta * (1.0 - cal.xi) * (cphi_next / cphi_now) ** (-1.0 / cal.psi)
    return m * (v_next / np.asarray(certainty_equiv)) ** (1.0 / cal.psi - g.gamma)


def _block_for(cal, quad=None, n_sfp=2):
    return WithinBlock(cal, quad if quad is not None else build_quadrature(cal),
                       n_sfp=n_sfp)


def household_residuals(cal, U, states, cont, *, quad=None, rule=None,
                        instrument=None):
    """Bond-Euler and portfolio/constraint residuals per group.

    Returns a dict with ``bond_euler`` (n_states, n_groups) and ``portfolio``
    (n_states, n_free_capital) blocks of the within-period system.
    """
    block = _block_for(cal, quad)
    lo = block.layout
    res = block.residuals(np.atleast_2d(U), np.atleast_2d(states), cont,
                          rule=rule, instrument=instrument)
    n = lo.n_groups
    return {
        "bond_euler": res[:, 2:2 + n],
        "portfolio": res[:, 2 + n:2 + n + len(lo.free_capital)],
    }


def supply_residuals(cal, U, states, cont, *, quad=None, rule=None,
                     instrument=None):
    """Production-side residuals: goods clearing, wage Phillips curve, and
    the construction identities (labor demand, investment price, production,
    capital-price recursion) evaluated explicitly."""
    block = _block_for(cal, quad)
    U2, st2 = np.atleast_2d(U), np.atleast_2d(states)
    res, pv, nb, diag = block.residuals(U2, st2, cont, rule=rule,
                                        instrument=instrument,
                                        full_output=True)
    kh = st2[:, 0]
    labor_demand = pv["w"] - (1.0 - cal.alpha) * kh**cal.alpha \
        * pv["ell"] ** (-cal.alpha)
    production = pv["y"] - pv["ell"] ** (1.0 - cal.alpha) * kh**cal.alpha
    investment_price = pv["q"] - (pv["k_agg"] / kh) ** cal.chi_x
    return {
        "goods_mc": res[:, 0] * pv["y"],
        "nkwpc": res[:, 1] * cal.epsilon_elast,
        "labor_demand": labor_demand,
        "investment_price": investment_price,
        "production": production,
        "tobin_q": diag["tobin"],
    }


def wealth_share_step(cal, shares, b_pc, k_pc, i_rate, pi_next, growth,
                      cap_unit, k_agg):
    """Next-period wealth shares and effective risk aversion before/after.

    ``cap_unit`` is the per-unit capital payoff (dividend plus resale value,
    disaster-adjusted); full turnover (xi = 1) returns the rebirth targets.
    Negative group wealth is passed through unclamped and reported.
    """
    shares = np.asarray(shares, dtype=float)
    payoff = (1.0 + i_rate) * np.asarray(b_pc) / ((1.0 + pi_next) * growth) \
        + cap_unit * np.asarray(k_pc)
    cap_total = cap_unit * k_agg
    s_next = cal.lam * (1.0 - cal.xi) * payoff / cap_total + cal.xi * cal.s_bar
    if abs(s_next.sum() - 1.0) > 1e-10:
        raise ValueError("wealth shares do not sum to one after transition")
    gamma_now = gamma_bar_raw(shares, cal.gammas)
    gamma_next = gamma_bar_raw(s_next, cal.gammas)
    flagged = bool(np.any(payoff <= 0.0))
    return s_next, gamma_now, gamma_next, flagged


def gamma_bar_raw(shares, gammas) -> float:
    """Share-weighted harmonic effective risk aversion, tolerant of small
    negative shares (leveraged groups after large losses)."""
    shares = np.asarray(shares, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    if abs(shares.sum() - 1.0) > 1e-8:
        raise ValueError("shares must sum to one")
    denom = float((shares / gammas).sum())
    if denom <= 0.0:
        raise ValueError("aggregate risk tolerance must be positive")
    return 1.0 / denom


def policy_rate(cal, rule: RuleParams, pi, m=1.0, *, y=None, y_flex=None,
                s_a=None, exp_premium=None, zlb=None):
    """Nominal policy rate from the (possibly augmented) rule.

    Composes multiplicatively in gross terms: inflation response, optional
    output-gap response, wealth-share and expected-premium augmentations,
    and the monetary shock m; the lower-bound clamp reports a binding flag.
    """
    icpt = cal.taylor_intercept if rule.intercept is None else rule.intercept
    log_rate = np.log1p(icpt) + rule.phi_pi * np.log1p(np.asarray(pi)) \
        + np.log(np.asarray(m, dtype=float))
    if rule.phi_y != 0.0:
        if y is None or y_flex is None:
            raise ValueError("output-gap response needs y and y_flex")
        log_rate = log_rate + rule.phi_y * (np.log(y) - np.log(y_flex))
    if rule.phi_s != 0.0:
        if s_a is None:
            raise ValueError("share response needs s_a")
        log_rate = log_rate + rule.phi_s * (np.asarray(s_a) - rule.s_ref)
    if rule.phi_rp != 0.0:
        if exp_premium is None:
            raise ValueError("premium response needs the expected premium")
        log_rate = log_rate + rule.phi_rp * (np.asarray(exp_premium)
                                             - rule.rp_ref)
    i = np.expm1(log_rate)
    use_zlb = rule.zlb if zlb is None else zlb
    binding = np.asarray(i) < 0.0 if use_zlb else np.zeros_like(i, dtype=bool)
    if use_zlb:
        i = np.maximum(i, 0.0)
    return i, binding


def mrc_at_state(surface, state, step_h: float = 1e-4, *, quad=None,
                 max_halvings: int = 6):
    """Marginal risk capacity at a state of a solved surface.

    Finite-differences the expected next-period wealth shares with respect
    to the policy rate (within-period system re-solved under a pegged rate),
    Richardson-refined and auto-halved until the two step sizes agree to 1%.
    Returns (mrc, dgamma_di); the identity dgamma_di = gamma_bar * mrc holds
    by the harmonic-mean structure of effective risk aversion.
    """
    from ..solvers.time_iteration import inner_period_solve

    cal = surface.cal
    quad = quad if quad is not None else build_quadrature(cal)
    block = WithinBlock(cal, quad, n_sfp=6)
    state = np.asarray(state, dtype=float)
    U0 = surface.unknowns(state[None, :])[0]
    i0 = float(U0[-1])
    gammas = cal.gammas

    def mean_shares(i_target):
        sol = inner_period_solve(state, cal, surface.cont, quad,
                                 instrument=i_target, U0=U0, block=block)
        _, pv, nb, _ = block.residuals(sol["unknowns"], state[None, :],
                                       surface.cont, instrument=[i_target],
                                       full_output=True, n_sfp=6)
        wts = nb["wts"]
        return (wts[0, :, None] * nb["s"][0]).sum(axis=0)

    if len(cal.groups) == 1:
        return 0.0, 0.0

    h = step_h
    for _ in range(max_halvings + 1):
        d_h = (mean_shares(i0 + h) - mean_shares(i0 - h)) / (2.0 * h)
        d_h2 = (mean_shares(i0 + h / 2) - mean_shares(i0 - h / 2)) / h
        richardson = (4.0 * d_h2 - d_h) / 3.0
        scale = max(np.abs(richardson).max(), 1e-14)
        if np.abs(d_h2 - d_h).max() <= 0.01 * scale:
            break
        h *= 0.5
    ds_di = richardson

    s_now = mean_shares(i0)
    gbar = gamma_bar_raw(s_now, gammas)
    mpr = gbar / gammas
    mrc = -float((ds_di * mpr).sum())
    dgamma_di = gbar * mrc
    return mrc, dgamma_di
