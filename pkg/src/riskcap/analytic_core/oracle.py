"""Exact numerical solver for the two-period economy.

No expansions anywhere: per-agent portfolio first-order conditions are
evaluated under Gauss-Hermite quadrature over the log-TFP shock, budget
constraints and market clearing hold exactly, and the nominal wage is rigid
at its inherited level (W0 = W_{-1}).  Period-1 prices are flexible with the
period-1 price level pegged to P0, so the realized real bond return equals
the nominal rate.

Timing and accounting:
  * Period-0 production uses inherited capital (aggregate k_bar) and labor
    hired at the rigid wage; labor is demand-determined.
  * Households receive wage income, dividends and resale value on inherited
    capital, real value of inherited nominal bonds, and installation
    profits; they consume a fraction (1 - beta) of wealth (unit IES with
    Epstein-Zin utility makes this exact) and split savings between capital
    at price q0 and nominal bonds in zero net supply.
  * New capital is produced from goods with convex installation costs,
    C(x) = x + (chi_x/2) (x - x_bar)^2 / k_bar, so q0 = C'(x0).
  * Period-1 output is A1 * exp(eps) * k0^alpha with inelastically supplied
    labor; capital earns its marginal product and the period-1 labor-income
    claim — perfectly correlated with the capital payoff, hence spanned —
    is capitalized into period-0 wealth (value q0 k0 (1-alpha)/alpha).
    This keeps the unit-IES consumption rule exact and makes the private
    return on capital equal its social marginal product.

Aggregate consistency: summing the asset-market clearing conditions and the
household budgets reproduces goods-market clearing identically (checked in
the test suite), so the residual system uses capital clearing, bond
clearing, and the n portfolio FOCs.
"""

from __future__ import annotations

import numpy as np

from ..numerics import gauss_hermite, newton_damped
from .params import TwoPeriodParams, TwoPeriodEquilibrium

_BAD = 1e8  # residual magnitude signalling an inadmissible iterate


class OracleError(RuntimeError):
    """Raised when the equilibrium system fails to converge."""


def _quadrature(params: TwoPeriodParams):
    nodes, weights = gauss_hermite(params.n_quad)
    eps = -0.5 * params.sigma ** 2 + params.sigma * nodes
    return eps, weights


def _core(params: TwoPeriodParams, price_level, i0, log_k0, omega,
          labor=None, tau_k=0.0):
    """Evaluate all within-period objects given prices and portfolios.

    A portfolio tax tau_k is levied per unit of value held in the risky
    claim, with each agent's payment rebated back lump-sum (taken as given
    when optimizing), so the tax twists the portfolio margin without any
    wealth effect: realized consumption is unchanged for given portfolios
    while the first-order condition carries the wedge.  (Rebating revenue
    in proportion to wealth instead would make the tax exactly neutral
    here: savings are proportional to wealth under unit IES, and with
    bonds in zero net supply the equilibrium nominal rate absorbs the tax
    one-for-one.  An equal per-capita rebate would turn it into a pure
    first-order redistribution instrument with no interior optimum.)

    Returns None when the candidate implies negative consumption, a
    non-positive capital price, or similar inadmissible outcomes.
    """
    p = params
    k_bar = p.k_agg
    k0 = np.exp(log_k0)
    w_nom = p.w_minus1
    w_real = w_nom / price_level
    if labor is None:
        # labor demand at the rigid nominal wage
        ell = ((1.0 - p.alpha) * price_level * k_bar ** p.alpha / w_nom) ** (1.0 / p.alpha)
    else:
        ell = labor
        w_real = (1.0 - p.alpha) * ell ** (-p.alpha) * k_bar ** p.alpha
    y0 = ell ** (1.0 - p.alpha) * k_bar ** p.alpha

    x0 = k0 - (1.0 - p.delta0) * k_bar
    x_bar = p.delta0 * k_bar
    q0 = 1.0 + p.chi_x * (x0 - x_bar) / k_bar
    if q0 <= 1e-8:
        return None
    install_cost = x0 + 0.5 * p.chi_x * (x0 - x_bar) ** 2 / k_bar
    install_profit = q0 * x0 - install_cost

    div0 = p.alpha * y0 / k_bar
    human0 = q0 * k0 * (1.0 - p.alpha) / p.alpha   # period-1 labor claim
    wealth = (w_real * ell + (div0 + (1.0 - p.delta0) * q0) * p.initial_capital
              + p.initial_bonds / price_level + install_profit + human0)
    if np.any(wealth <= 0.0):
        return None
    c0 = (1.0 - p.beta) * wealth
    a0 = p.beta * wealth

    a1_scale = k_bar ** (1.0 - p.alpha) / (p.alpha * p.beta)
    gross_rk_det = p.alpha * a1_scale * k0 ** (p.alpha - 1.0) / q0
    eps, qw = _quadrature(p)
    gross_rk = gross_rk_det * np.exp(eps)   # (m,)
    gross_r = 1.0 + i0
    if gross_r <= 0.0:
        return None
    # period-1 consumption, agents x quadrature nodes; own-payment rebate
    # cancels the tax out of realized consumption (but not the margin)
    c1 = a0[:, None] * ((1.0 - omega[:, None]) * gross_r
                        + omega[:, None] * gross_rk[None, :])
    if np.any(c1 <= 0.0):
        return None
    return dict(k0=k0, q0=q0, ell=ell, y0=y0, w_real=w_real, x0=x0,
                install_cost=install_cost, install_profit=install_profit,
                wealth=wealth, c0=c0, a0=a0, c1=c1, gross_rk=gross_rk,
                gross_rk_det=gross_rk_det, gross_r=gross_r, eps=eps, qw=qw,
                div0=div0, a1_scale=a1_scale, human0=human0, tau_k=tau_k)


def _risky_supply(core):
    # value of all risky claims: installed capital plus the labor claim
    return core["q0"] * core["k0"] + core["human0"]


def _market_residuals(params, core, omega):
    supply = _risky_supply(core)
    cap = (core["a0"] * omega).mean() / supply - 1.0
    bond = (core["a0"] * (1.0 - omega)).mean() / supply
    return cap, bond


def _portfolio_residuals(params, core, omega):
    c1, qw = core["c1"], core["qw"]
    excess = core["gross_rk"][None, :] - core["gross_r"] - core["tau_k"]
    mu = c1 ** (-params.gammas[:, None])
    num = (qw[None, :] * mu * excess).sum(axis=1)
    den = (qw[None, :] * mu).sum(axis=1) * core["gross_r"]
    return num / den


def _log_values(params, core):
    """Per-agent lifetime log utility (unit IES Epstein-Zin)."""
    p = params
    dis = p.theta_bar * core["ell"] ** (1.0 + 1.0 / p.theta) / (1.0 + 1.0 / p.theta)
    c1, qw = core["c1"], core["qw"]
    log_ce = np.empty(p.n_agents)
    for i, g in enumerate(p.gammas):
        if abs(g - 1.0) < 1e-12:
            log_ce[i] = (qw * np.log(c1[i])).sum()
        else:
            log_ce[i] = np.log((qw * c1[i] ** (1.0 - g)).sum()) / (1.0 - g)
    return (1.0 - p.beta) * np.log(core["c0"]) - dis + p.beta * log_ce


def _finalize(params, price_level, i0, core, omega, degenerate, report):
    a0 = core["a0"]
    rp = (np.log(core["gross_rk_det"]) - 0.5 * params.sigma ** 2
          - np.log(core["gross_r"]))
    cap, bond = _market_residuals(params, core, omega)
    return TwoPeriodEquilibrium(
        price_level=float(price_level),
        capital=float(core["k0"]),
        consumption=core["c0"].copy(),
        portfolio_share=(np.full(params.n_agents, np.nan) if degenerate
                         else omega.copy()),
        savings_share=a0 / a0.sum(),
        q0=float(core["q0"]),
        risk_premium=float(rp),
        labor=float(core["ell"]),
        output=float(core["y0"]),
        i0=float(i0),
        wealth=core["wealth"].copy(),
        savings=a0.copy(),
        bonds=a0 * (1.0 - omega),
        log_values=_log_values(params, core),
        degenerate_portfolio=degenerate,
        residual_norm=float(report.residual_norm),
        clearing_residuals={"capital": float(cap), "bond": float(bond)},
    )


def _taylor_rate(params, price_level, eps_m):
    return (1.0 + params.i_bar) * price_level ** params.phi * np.exp(eps_m) - 1.0


def _initial_omegas(params):
    gam = params.gammas
    gbar0 = 1.0 / np.mean(1.0 / gam)
    return gbar0 / gam


def _solve(params, residual_fn, z0, label):
    report = newton_damped(residual_fn, z0, tol=1e-12, max_iter=120)
    if report.residual_norm > 1e-10:
        raise OracleError(
            f"{label} solve failed: residual {report.residual_norm:.3e} "
            f"after {report.iterations} iterations ({report.message})")
    return report.x, report


def solve_two_period_oracle(params: TwoPeriodParams,
                            eps_m: float = 0.0,
                            tau_k: float = 0.0) -> TwoPeriodEquilibrium:
    """Competitive equilibrium under the interest-rate rule.

    Unknowns are log P0, log k0 and the per-agent capital shares of
    savings; with sigma = 0 the portfolio split is indeterminate and a
    reduced no-arbitrage system is solved instead (flagged on the result).
    """
    n = params.n_agents

    if params.sigma == 0.0:
        if tau_k != 0.0:
            raise ValueError("portfolio tax undefined without risk")
        def resid0(z):
            price = np.exp(z[0])
            i0 = _taylor_rate(params, price, eps_m)
            core = _core(params, price, i0, z[1], np.ones(n))
            if core is None:
                return np.full(2, _BAD)
            cap = core["a0"].mean() / _risky_supply(core) - 1.0
            noarb = core["gross_rk_det"] / core["gross_r"] - 1.0
            return np.array([cap, noarb])

        z, report = _solve(params, resid0, np.array([0.0, np.log(params.k_agg)]),
                           "riskless")
        price = np.exp(z[0])
        i0 = _taylor_rate(params, price, eps_m)
        core = _core(params, price, i0, z[1], np.ones(n))
        return _finalize(params, price, i0, core, np.ones(n), True, report)

    def resid(z):
        price = np.exp(z[0])
        i0 = _taylor_rate(params, price, eps_m)
        core = _core(params, price, i0, z[1], z[2:], tau_k=tau_k)
        if core is None:
            return np.full(n + 2, _BAD)
        cap, bond = _market_residuals(params, core, z[2:])
        return np.concatenate([[cap, bond],
                               _portfolio_residuals(params, core, z[2:])])

    z0 = np.concatenate([[0.0, np.log(params.k_agg)], _initial_omegas(params)])
    z, report = _solve(params, resid, z0, "rule equilibrium")
    price = np.exp(z[0])
    i0 = _taylor_rate(params, price, eps_m)
    core = _core(params, price, i0, z[1], z[2:], tau_k=tau_k)
    return _finalize(params, price, i0, core, z[2:], False, report)


def solve_with_price_level(params: TwoPeriodParams,
                           price_level: float,
                           tau_k: float = 0.0) -> TwoPeriodEquilibrium:
    """Equilibrium with the period-0 price level imposed directly.

    The nominal rate replaces the price level as an unknown (the policy
    instrument is whatever rate supports the chosen price).  Used by the
    planner experiments, which optimize over P0.
    """
    n = params.n_agents

    if params.sigma == 0.0:
        if tau_k != 0.0:
            raise ValueError("portfolio tax undefined without risk")

        def resid0(z):
            core = _core(params, price_level, z[0], z[1], np.ones(n))
            if core is None:
                return np.full(2, _BAD)
            cap = core["a0"].mean() / _risky_supply(core) - 1.0
            noarb = core["gross_rk_det"] / core["gross_r"] - 1.0
            return np.array([cap, noarb])

        z, report = _solve(params, resid0,
                           np.array([1.0 / params.beta - 1.0, np.log(params.k_agg)]),
                           "riskless fixed-price")
        core = _core(params, price_level, z[0], z[1], np.ones(n))
        return _finalize(params, price_level, z[0], core, np.ones(n), True, report)

    def resid(z):
        core = _core(params, price_level, z[0], z[1], z[2:], tau_k=tau_k)
        if core is None:
            return np.full(n + 2, _BAD)
        cap, bond = _market_residuals(params, core, z[2:])
        return np.concatenate([[cap, bond],
                               _portfolio_residuals(params, core, z[2:])])

    z0 = np.concatenate([[1.0 / params.beta - 1.0, np.log(params.k_agg)],
                         _initial_omegas(params)])
    z, report = _solve(params, resid, z0, "fixed-price equilibrium")
    core = _core(params, price_level, z[0], z[1], z[2:], tau_k=tau_k)
    return _finalize(params, price_level, z[0], core, z[2:], False, report)


def solve_flexible_wage(params: TwoPeriodParams) -> TwoPeriodEquilibrium:
    """Flexible-wage benchmark: labor satisfies the welfare-weighted
    optimality condition instead of being demand-determined.

    The real allocation is independent of nominal policy here, so the price
    level is normalized to one.  Output from this solve defines the gap
    benchmark for the target-criterion experiments.
    """
    n = params.n_agents
    wts = params.weights_norm

    def labor_resid(core, ell):
        mu_income = (wts / core["wealth"]).sum()
        return params.theta_bar * ell ** (1.0 / params.theta) / (
            core["w_real"] * mu_income) - 1.0

    if params.sigma == 0.0:
        def resid0(z):
            core = _core(params, 1.0, z[0], z[1], np.ones(n),
                         labor=np.exp(z[2]))
            if core is None:
                return np.full(3, _BAD)
            cap = core["a0"].mean() / _risky_supply(core) - 1.0
            noarb = core["gross_rk_det"] / core["gross_r"] - 1.0
            return np.array([cap, noarb, labor_resid(core, np.exp(z[2]))])

        z, report = _solve(params, resid0,
                           np.array([1.0 / params.beta - 1.0,
                                     np.log(params.k_agg), 0.0]),
                           "riskless flexible-wage")
        core = _core(params, 1.0, z[0], z[1], np.ones(n), labor=np.exp(z[2]))
        return _finalize(params, 1.0, z[0], core, np.ones(n), True, report)

    def resid(z):
        ell = np.exp(z[2])
        core = _core(params, 1.0, z[0], z[1], z[3:], labor=ell)
        if core is None:
            return np.full(n + 3, _BAD)
        cap, bond = _market_residuals(params, core, z[3:])
        return np.concatenate([[cap, bond, labor_resid(core, ell)],
                               _portfolio_residuals(params, core, z[3:])])

    z0 = np.concatenate([[1.0 / params.beta - 1.0, np.log(params.k_agg), 0.0],
                         _initial_omegas(params)])
    z, report = _solve(params, resid, z0, "flexible-wage equilibrium")
    core = _core(params, 1.0, z[0], z[1], z[3:], labor=np.exp(z[2]))
    return _finalize(params, 1.0, z[0], core, z[3:], False, report)


def rebuild_core(params: TwoPeriodParams, eq: TwoPeriodEquilibrium):
    """Reconstruct the full within-period objects from a solved equilibrium."""
    omega = (np.ones(params.n_agents) if eq.degenerate_portfolio
             else eq.portfolio_share)
    return _core(params, eq.price_level, eq.i0, np.log(eq.capital), omega)


def calibrate_baseline(params: TwoPeriodParams,
                       negishi: bool = True) -> TwoPeriodParams:
    """Pin down the rule intercept, rigid wage, labor disutility, and
    (optionally) wealth-proportional welfare weights.

    The rigid wage is set so labor is one at a unit price level; the rule
    intercept makes P0 = 1 the rule equilibrium at a zero policy shock; the
    labor disutility removes the welfare-weighted labor wedge there.
    """
    k_bar = params.k_agg
    w = params.with_(w_minus1=(1.0 - params.alpha) * k_bar ** params.alpha)
    eq = solve_with_price_level(w, 1.0)
    if negishi:
        w = w.with_(pareto_weights=eq.wealth / eq.wealth.sum())
    wts = w.weights_norm
    w_real = w.w_minus1  # P0 = 1
    theta_bar = w_real * (wts / eq.wealth).sum() / eq.labor ** (1.0 / w.theta)
    return w.with_(theta_bar=theta_bar, i_bar=eq.i0)
