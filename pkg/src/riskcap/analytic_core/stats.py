"""Risk-capacity statistics and welfare channels for the two-period economy.

The central objects:

  * effective risk aversion: savings-share-weighted harmonic mean of
    per-agent risk aversion, the price of aggregate risk the market quotes;
  * MPR (marginal propensity to take risk): how a marginal unit of savings
    is split into the risky asset, equal to gamma_bar/gamma_i at the
    zero-risk limit and to the portfolio share under unit IES;
  * MRC (marginal risk capacity): minus the cross-sectional inner product
    of policy exposures of savings shares with MPRs — the single statistic
    through which redistribution moves risk premia.

Everything labelled "oracle_" re-solves the exact equilibrium at perturbed
policy shocks, providing ground-truth finite differences.
"""

from __future__ import annotations

import numpy as np

from .oracle import rebuild_core, solve_two_period_oracle
from .params import TwoPeriodParams, TwoPeriodEquilibrium


def effective_risk_aversion(shares, gammas) -> float:
    shares = np.asarray(shares, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    if np.any(gammas <= 0.0):
        raise ValueError("risk aversions must be positive")
    if np.any(shares < -1e-12) or abs(shares.sum() - 1.0) > 1e-12:
        raise ValueError("shares must be nonnegative and sum to one")
    return float(1.0 / (shares / gammas).sum())


def mpr_of(gamma_bar: float, gamma_i: float) -> float:
    if gamma_bar <= 0.0 or gamma_i <= 0.0:
        raise ValueError("risk aversions must be positive")
    return gamma_bar / gamma_i


def marginal_risk_capacity(exposures, mprs) -> float:
    exposures = np.asarray(exposures, dtype=float)
    mprs = np.asarray(mprs, dtype=float)
    if abs(exposures.sum()) > 1e-9 * max(1.0, np.abs(exposures).max()):
        raise ValueError("savings-share exposures must sum to zero")
    return float(-(exposures * mprs).sum())


def risk_premium_sensitivity(gamma_bar: float, sigma: float,
                             mrc: float) -> float:
    """Predicted d(risk premium)/d(policy shock): gamma_bar * sigma^2 * MRC."""
    if sigma < 0.0:
        raise ValueError("sigma must be >= 0")
    return gamma_bar * sigma ** 2 * mrc


def oracle_exposures(params: TwoPeriodParams, h: float = 1e-4) -> np.ndarray:
    """Finite-difference d(savings share)/d(policy shock), per agent."""
    ep = solve_two_period_oracle(params, +h)
    em = solve_two_period_oracle(params, -h)
    return (ep.savings_share - em.savings_share) / (2.0 * h)


def oracle_mprs(params: TwoPeriodParams,
                equilibrium: TwoPeriodEquilibrium) -> np.ndarray:
    """Marginal propensities to take risk at a solved equilibrium.

    With unit IES the portfolio problem is homothetic in savings, so the
    marginal and average risky shares coincide and the exact MPR is the
    portfolio share itself.
    """
    if equilibrium.degenerate_portfolio:
        raise ValueError("MPRs undefined in the degenerate no-risk case")
    return equilibrium.portfolio_share.copy()


def oracle_rp_slope(params: TwoPeriodParams, h: float = 1e-4) -> float:
    """Ground-truth finite difference d(risk premium)/d(policy shock)."""
    ep = solve_two_period_oracle(params, +h)
    em = solve_two_period_oracle(params, -h)
    return float((ep.risk_premium - em.risk_premium) / (2.0 * h))


def oracle_wealth_exposures(params: TwoPeriodParams,
                            h: float = 1e-4) -> np.ndarray:
    """Finite-difference redistribution exposure of wealth to the policy
    shock: d(wealth)/d(shock) net of (i) the neutral wage-income component
    and (ii) the wealth-proportional aggregate revaluation.

    The employment response w0*dl is paid to every agent identically and is
    offset one-for-one by labor disutility at the calibrated zero-wedge
    point; the proportional aggregate component is matched by each agent's
    own position on the other side of the asset trades.  What remains is
    the zero-sum cross-sectional redistribution the consumption channel
    prices.
    """
    ep = solve_two_period_oracle(params, +h)
    em = solve_two_period_oracle(params, -h)
    eq0 = solve_two_period_oracle(params, 0.0)
    w0 = params.w_minus1 / eq0.price_level
    dl = (ep.labor - em.labor) / (2.0 * h)
    dn = (ep.wealth - em.wealth) / (2.0 * h) - w0 * dl
    return dn - eq0.wealth * dn.sum() / eq0.wealth.sum()


def real_effects(params: TwoPeriodParams, equilibrium: TwoPeriodEquilibrium,
                 d_rp: float, d_r: float):
    """Closed-form responses of capital, consumption, and output to changes
    in the risk premium and the real rate (holding all else fixed).

    Asset pricing ties log k0 to the required return with elasticity
    -(1 - alpha + chi_x); consumption follows from the unit-IES savings
    rule and the flow of funds; output adds the investment response.
    """
    k0, q0 = equilibrium.capital, equilibrium.q0
    x0 = k0 - (1.0 - params.delta0) * params.k_agg
    dk = -k0 / (1.0 - params.alpha + params.chi_x) * (d_rp + d_r)
    dc = (1.0 - params.beta) / params.beta * q0 * (1.0 + params.chi_x) * dk
    dy = dc + q0 * (1.0 + params.chi_x * x0 / k0) * dk
    return dk, dc, dy


def welfare(params: TwoPeriodParams, equilibrium: TwoPeriodEquilibrium) -> float:
    """Weighted social welfare Σ α_i log v_i (weights normalized)."""
    return float((params.weights_norm * equilibrium.log_values).sum())


def oracle_welfare_slope(params: TwoPeriodParams, h: float = 1e-4) -> float:
    """Finite difference dW/d(policy shock) along the rule path."""
    ep = solve_two_period_oracle(params, +h)
    em = solve_two_period_oracle(params, -h)
    return (welfare(params, ep) - welfare(params, em)) / (2.0 * h)


def welfare_decomposition(params: TwoPeriodParams, exposures_n, mpcs,
                          mrc: float, gamma_bar: float, sigma: float):
    """Split dW/d(policy shock) into the consumption-redistribution channel
    and the risk-premium channel.

      consumption channel: exposure-weighted marginal utilities of wealth.
        With unit IES a marginal unit of wealth raises lifetime log utility
        by 1/n0 exactly (the MPC governs only its timing), so the channel is
        Σ α_i (MPC_i/(1-β)) (dn_i/dε)/n0_i.
      risk premium channel: Γ_k γ̄ σ² MRC with Γ_k = β Σ α_i ω_i — each
        agent values a risk-premium change in proportion to its risky share.

    With wealth-proportional welfare weights all first-order incidence nets
    out by market clearing, and the residual between the channel sum and
    the exact welfare derivative is the second-order pecuniary offset to
    the risk-premium channel; it scales with σ², which the Richardson test
    (halving σ) verifies.
    """
    exposures_n = np.asarray(exposures_n, dtype=float)
    mpcs = np.asarray(mpcs, dtype=float)
    eq = solve_two_period_oracle(params, 0.0)
    wts = params.weights_norm
    cons = float((wts * (mpcs / (1.0 - params.beta))
                  * exposures_n / eq.wealth).sum())
    if eq.degenerate_portfolio:
        gamma_k = params.beta  # all-riskless limit: common portfolio weight 1
    else:
        gamma_k = params.beta * float((wts * eq.portfolio_share).sum())
    rp_chan = gamma_k * gamma_bar * sigma ** 2 * mrc
    return cons, rp_chan
