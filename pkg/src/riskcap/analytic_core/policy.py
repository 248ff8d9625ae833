"""Planner experiments on the two-period economy.

Everything here treats the period-0 price level (equivalently, the nominal
rate that supports it) as the planner's instrument and welfare as the
Pareto-weighted sum of log lifetime values.  The module provides

  * the efficient effective risk aversion implied by a utilitarian
    planner's consumption allocation,
  * extraction of the linear policy-rule coefficients (price-stability,
    output-gap, and risk-premium-channel weights) around the riskless
    optimum, and the residual of the linear targeting rule,
  * the commitment optimum over the price level,
  * the two-instrument (price level + portfolio tax) allocation, and
  * the discretionary fixed point where portfolios anticipate policy.

All derivatives are central finite differences of exact equilibrium
solves; no expansions of the model itself are used anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize

from .oracle import (OracleError, rebuild_core, solve_flexible_wage,
                     solve_two_period_oracle, solve_with_price_level)
from .params import TwoPeriodEquilibrium, TwoPeriodParams
from .stats import effective_risk_aversion, marginal_risk_capacity, welfare


class PolicyError(RuntimeError):
    """Raised when a planner computation fails or violates an invariant."""


# ---------------------------------------------------------------------------
# efficient effective risk aversion
# ---------------------------------------------------------------------------

def planner_allocation(params: TwoPeriodParams, eq=None):
    """Utilitarian consumption allocation holding production fixed.

    Aggregate period-0 consumption and the state-by-state aggregate
    period-1 consumption of the competitive equilibrium are reallocated
    across agents to maximize the equal-weighted sum of log lifetime
    values.  Labor and investment are left at their equilibrium values.
    Returns (c0_star, c1_star) with shapes (n,) and (n, m).
    """
    p = params
    if eq is None:
        eq = solve_two_period_oracle(p)
    core = rebuild_core(p, eq)
    qw = core["qw"]
    n, m = p.n_agents, qw.size
    c0_agg = core["c0"].mean()
    c1_agg = core["c1"].mean(axis=0)

    def shares(zcol):
        # n-1 free logits per column; agent 0 is the numeraire
        z = np.vstack([np.zeros(zcol.shape[-1]), zcol.reshape(n - 1, -1)])
        ez = np.exp(z - z.max(axis=0))
        return ez / ez.sum(axis=0)

    def negwelfare(zflat):
        s = shares(zflat.reshape(n - 1, m + 1))
        c0 = n * c0_agg * s[:, 0]
        c1 = n * c1_agg[None, :] * s[:, 1:]
        val = 0.0
        for i, g in enumerate(p.gammas):
            if abs(g - 1.0) < 1e-12:
                log_ce = (qw * np.log(c1[i])).sum()
            else:
                log_ce = np.log((qw * c1[i] ** (1.0 - g)).sum()) / (1.0 - g)
            val += (1.0 - p.beta) * np.log(c0[i]) + p.beta * log_ce
        return -val / n

    z0 = np.zeros((n - 1) * (m + 1))
    res = minimize(negwelfare, z0, method="L-BFGS-B",
                   options={"maxiter": 500, "ftol": 1e-16, "gtol": 1e-12})
    s = shares(res.x.reshape(n - 1, m + 1))
    c0 = n * c0_agg * s[:, 0]
    c1 = n * c1_agg[None, :] * s[:, 1:]
    return c0, c1


def gamma_star(params: TwoPeriodParams, eq=None) -> float:
    """Efficient effective risk aversion.

    Harmonic mean of per-agent risk aversions weighted by inverse marginal
    utility of period-0 consumption at the utilitarian planner allocation.
    With equal-weight log period-0 utility planner consumption is equalized
    and this reduces to the plain harmonic mean of the gammas.
    """
    c0, _ = planner_allocation(params, eq)
    inv_mu = 1.0 / c0
    wts = inv_mu / inv_mu.sum()
    return 1.0 / (wts / params.gammas).sum()


# ---------------------------------------------------------------------------
# welfare and channel partials along the imposed-price manifold
# ---------------------------------------------------------------------------

def _welfare_at(params, pi, tau_k=0.0):
    return welfare(params, solve_with_price_level(params, float(np.exp(pi)),
                                                  tau_k))


def _welfare_slope(params, pi, h=1e-5, tau_k=0.0):
    return (_welfare_at(params, pi + h, tau_k)
            - _welfare_at(params, pi - h, tau_k)) / (2.0 * h)


def _output_channel(params, pi):
    """Welfare derivative w.r.t. log P0 coming from the labor margin.

    At the rigid nominal wage, dividends are stationary in labor (labor
    demand equates the marginal product to the real wage), so the margin
    is wage income minus disutility, times dl/dpi = l/alpha.
    """
    eq = solve_with_price_level(params, float(np.exp(pi)))
    core = rebuild_core(params, eq)
    wts = params.weights_norm
    ell = core["ell"]
    mu_inc = (wts / core["wealth"]).sum() * core["w_real"]
    return (mu_inc - params.theta_bar * ell ** (1.0 / params.theta)) * (
        ell / params.alpha)


def output_gap(params: TwoPeriodParams, eq: TwoPeriodEquilibrium,
               flex_output: float | None = None) -> float:
    """Log shortfall of output from its flexible-wage benchmark."""
    if flex_output is None:
        flex_output = solve_flexible_wage(params).output
    return float(np.log(flex_output) - np.log(eq.output))


def risk_stats_at(params: TwoPeriodParams, pi: float, tau_k: float = 0.0,
                  h: float = 1e-4):
    """(gamma_bar, mrc, eq) at an imposed price level.

    Exposures are finite differences of savings shares to a policy-rule
    surprise, with the rule intercept re-centred so that the rule
    equilibrium reproduces the imposed price.
    """
    eq = solve_with_price_level(params, float(np.exp(pi)), tau_k)
    ibar = (1.0 + eq.i0) / eq.price_level ** params.phi - 1.0
    p2 = params.with_(i_bar=ibar)
    ep = solve_two_period_oracle(p2, h, tau_k)
    em = solve_two_period_oracle(p2, -h, tau_k)
    ds = (ep.savings_share - em.savings_share) / (2.0 * h)
    gbar = effective_risk_aversion(eq.savings_share, params.gammas)
    mrc = marginal_risk_capacity(ds, eq.portfolio_share)
    return gbar, mrc, eq


# ---------------------------------------------------------------------------
# linear targeting-rule coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlannerGammas:
    """Coefficients of the linear targeting rule and their expansion point.

    pi_ref is the riskless planner optimum; inflation and the output gap
    entering the rule are measured relative to this point, which makes the
    rule exact to first order in the policy deviation for any Pareto
    weights (at wealth-proportional weights pi_ref is zero and deviations
    coincide with levels).
    """
    gamma_pi: float
    gamma_x: float
    gamma_rp: float
    pi_ref: float
    ygap_ref: float
    gamma_bar: float
    gamma_star: float
    mrc: float
    sigma: float
    wedge: float


def _slope_root(fn, x0, step, max_expand=60, label="slope"):
    """Bracket a sign change of fn around x0 and solve with brentq."""
    a, fa = x0, fn(x0)
    if fa == 0.0:
        return x0
    direction = 1.0 if fa > 0.0 else -1.0
    b = a
    fb = fa
    for _ in range(max_expand):
        b = b + direction * step
        fb = fn(b)
        if fa * fb <= 0.0:
            lo, hi = (a, b) if a < b else (b, a)
            return brentq(fn, lo, hi, xtol=1e-13, rtol=1e-14)
        a, fa = b, fb
    raise PolicyError(f"could not bracket {label} around {x0:+.4f}")


def deterministic_optimal_inflation(params: TwoPeriodParams,
                                    step: float = 0.02) -> float:
    """Riskless planner optimum over log P0 for the params' weights."""
    pdet = params.with_(sigma=0.0)
    return _slope_root(lambda x: _welfare_slope(pdet, x), 0.0, step,
                       label="riskless welfare slope")


def planner_gammas(params: TwoPeriodParams, h_outer: float = 1e-3,
                   h_inner: float = 1e-5) -> PlannerGammas:
    """Extract the targeting-rule coefficients around the riskless optimum.

    The riskless welfare slope is split into an output-margin part
    (computed analytically from the labor wedge) and a residual
    price-stability part; their local slopes give the output-gap and
    inflation coefficients.  The risk-premium coefficient converts the
    risk-induced shift of the welfare slope at the riskless optimum into
    units of MRC x (gamma_bar - gamma_star) x sigma^2.
    """
    pdet = params.with_(sigma=0.0)
    pi_ref = deterministic_optimal_inflation(params)

    flex_det = solve_flexible_wage(pdet).output

    def cy(pi):
        return _output_channel(pdet, pi)

    def cpi(pi):
        return _welfare_slope(pdet, pi, h_inner) - cy(pi)

    def ygap_det(pi):
        return output_gap(pdet, solve_with_price_level(pdet, float(np.exp(pi))),
                          flex_det)

    gamma_pi = -(cpi(pi_ref + h_outer) - cpi(pi_ref - h_outer)) / (2 * h_outer)
    dy = ygap_det(pi_ref + h_outer) - ygap_det(pi_ref - h_outer)
    gamma_x = (cy(pi_ref + h_outer) - cy(pi_ref - h_outer)) / dy

    gbar, mrc, _ = risk_stats_at(params, pi_ref)
    gstar = gamma_star(params)
    wedge_slope = (_welfare_slope(params, pi_ref, h_inner)
                   - _welfare_slope(pdet, pi_ref, h_inner))
    denom = mrc * (gbar - gstar) * params.sigma ** 2
    if abs(denom) < 1e-14:
        gamma_rp = 0.0
    else:
        gamma_rp = wedge_slope / denom
    ygap_ref = ygap_det(pi_ref)
    return PlannerGammas(gamma_pi=float(gamma_pi), gamma_x=float(gamma_x),
                         gamma_rp=float(gamma_rp), pi_ref=float(pi_ref),
                         ygap_ref=float(ygap_ref), gamma_bar=float(gbar),
                         gamma_star=float(gstar), mrc=float(mrc),
                         sigma=params.sigma, wedge=float(wedge_slope))


def target_criterion_eval(pi0, y_gap, mrc, gamma_bar, gamma_star_value,
                          sigma, gammas) -> float:
    """Residual of the linear targeting rule.

    gammas is the (gamma_pi, gamma_x, gamma_rp) triple; all three must be
    positive.  pi0 and y_gap are measured relative to the riskless
    planner optimum (see PlannerGammas).
    """
    g_pi, g_x, g_rp = gammas
    if not (g_pi > 0.0 and g_x > 0.0 and g_rp > 0.0):
        raise PolicyError("targeting-rule coefficients must be positive, "
                          f"got ({g_pi:.3e}, {g_x:.3e}, {g_rp:.3e})")
    wedge = g_rp * mrc * (gamma_bar - gamma_star_value) * sigma ** 2
    return g_pi * pi0 - g_x * y_gap - wedge


# ---------------------------------------------------------------------------
# commitment optimum
# ---------------------------------------------------------------------------

def optimal_price_level(params: TwoPeriodParams, tau_k: float = 0.0,
                        span: float = 0.4, ngrid: int = 33):
    """Planner optimum over log P0: grid search, then a slope root.

    Returns (pi_star, equilibrium_at_pi_star).
    """
    grid = np.linspace(-span, span, ngrid)
    best, best_w = None, -np.inf
    for pi in grid:
        try:
            w = _welfare_at(params, pi, tau_k)
        except OracleError:
            continue
        if w > best_w:
            best, best_w = pi, w
    if best is None:
        raise PolicyError("no feasible price level on the search grid")
    pi_star = _slope_root(lambda x: _welfare_slope(params, x, tau_k=tau_k),
                          best, grid[1] - grid[0], label="welfare slope")
    return float(pi_star), solve_with_price_level(
        params, float(np.exp(pi_star)), tau_k)


def commitment_optimum(params: TwoPeriodParams):
    """Welfare-maximizing price level with portfolios chosen under the
    announced policy.  Returns (pi_C, equilibrium)."""
    return optimal_price_level(params)


# ---------------------------------------------------------------------------
# two-instrument allocation (price level + portfolio tax)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparationResult:
    pi0: float
    tau_k: float
    wedge_after: float
    wedge_monetary: float
    pi_monetary: float
    gamma_gap: float
    constrained: bool
    binding: bool


def separation_allocation(params: TwoPeriodParams,
                          tau_bound: float = 0.05,
                          nonnegative_tax: bool = False) -> SeparationResult:
    """Joint planner optimum over the price level and the portfolio tax.

    The monetary wedge at a given tax is the amount by which the
    price-level optimum violates the two-term (price-stability plus
    output-gap) rule: wedge(tau) = Gamma_pi * pi~ - Gamma_x * ygap~, with
    deviations measured from the riskless optimum.  Since the tax twists
    only the portfolio margin, its first-order condition is exactly that
    this wedge vanish, so the joint optimum is located by root-finding
    wedge(tau).  With the tax sign-restricted and the root on the excluded
    side, the constraint binds and the monetary-only solution is returned.
    """
    coeffs = planner_gammas(params)
    pdet = params.with_(sigma=0.0)
    flex_det = solve_flexible_wage(pdet).output

    cache = {}

    def solve_at(tau):
        if tau not in cache:
            pi, eq = optimal_price_level(params, tau)
            ygap = float(np.log(flex_det) - np.log(eq.output))
            wedge = (coeffs.gamma_pi * (pi - coeffs.pi_ref)
                     - coeffs.gamma_x * (ygap - coeffs.ygap_ref))
            cache[tau] = (pi, wedge)
        return cache[tau]

    pi_mon, wedge_mon = solve_at(0.0)

    def wedge_of(tau):
        return solve_at(tau)[1]

    lo, hi = -tau_bound, tau_bound
    wlo, whi = wedge_of(lo), wedge_of(hi)
    if wlo * whi > 0.0:
        raise PolicyError("monetary wedge does not change sign on the "
                          f"tax bracket [{lo:+.3f}, {hi:+.3f}]")
    tau_star = brentq(wedge_of, lo, hi, xtol=1e-13)
    binding = nonnegative_tax and tau_star < 0.0
    if binding:
        tau_star = 0.0
    pi_star, wedge_after = solve_at(tau_star)
    gbar, _, _ = risk_stats_at(params, pi_star, tau_star)
    return SeparationResult(pi0=float(pi_star), tau_k=float(tau_star),
                            wedge_after=float(wedge_after),
                            wedge_monetary=float(wedge_mon),
                            pi_monetary=float(pi_mon),
                            gamma_gap=float(gbar - coeffs.gamma_star),
                            constrained=bool(nonnegative_tax),
                            binding=bool(binding))


# ---------------------------------------------------------------------------
# discretion: frozen positions and the best-response fixed point
# ---------------------------------------------------------------------------

def _frozen_positions(params, eq):
    core = rebuild_core(params, eq)
    omega = (np.ones(params.n_agents) if eq.degenerate_portfolio
             else eq.portfolio_share)
    risky = core["a0"] * omega                      # real value of risky claims
    bond_nominal = core["a0"] * (1.0 - omega) * eq.price_level
    return dict(core=core, risky=risky, bond_nominal=bond_nominal,
                i0=eq.i0, q0=core["q0"],
                install_profit=core["install_profit"],
                install_cost=core["install_cost"],
                human0=core["human0"], gross_rk=core["gross_rk"],
                qw=core["qw"])


def _deviation_welfare(params, frozen, pi):
    """Welfare when the realized price level deviates from the one the
    positions were contracted at.

    Nominal bond claims, real risky positions, the capital price, the
    investment plan, and the contracted nominal rate are all fixed;
    the price surprise moves labor through the rigid nominal wage and
    revalues nominal claims.  Goods-market clearing holds identically.
    """
    p = params
    price = float(np.exp(pi))
    k_bar = p.k_agg
    ell = ((1.0 - p.alpha) * price * k_bar ** p.alpha / p.w_minus1) ** (1.0 / p.alpha)
    y0 = ell ** (1.0 - p.alpha) * k_bar ** p.alpha
    w_real = p.w_minus1 / price
    div0 = p.alpha * y0 / k_bar
    n0 = (w_real * ell + (div0 + (1.0 - p.delta0) * frozen["q0"]) * p.initial_capital
          + p.initial_bonds / price + frozen["install_profit"]
          + frozen["human0"])
    c0 = n0 - frozen["bond_nominal"] / price - frozen["risky"]
    if np.any(c0 <= 0.0):
        return -np.inf
    bond_payoff = (1.0 + frozen["i0"]) * frozen["bond_nominal"] / price
    c1 = bond_payoff[:, None] + frozen["gross_rk"][None, :] * frozen["risky"][:, None]
    if np.any(c1 <= 0.0):
        return -np.inf
    qw = frozen["qw"]
    dis = p.theta_bar * ell ** (1.0 + 1.0 / p.theta) / (1.0 + 1.0 / p.theta)
    total = 0.0
    for i, g in enumerate(p.gammas):
        if abs(g - 1.0) < 1e-12:
            log_ce = (qw * np.log(c1[i])).sum()
        else:
            log_ce = np.log((qw * c1[i] ** (1.0 - g)).sum()) / (1.0 - g)
        total += p.weights_norm[i] * ((1.0 - p.beta) * np.log(c0[i]) - dis
                                      + p.beta * log_ce)
    return total


def best_response_inflation(params: TwoPeriodParams, pi_expected: float,
                            h: float = 1e-7) -> float:
    """Optimal realized log price level when positions were contracted at
    the expected one."""
    eq = solve_with_price_level(params, float(np.exp(pi_expected)))
    frozen = _frozen_positions(params, eq)

    def slope(pi):
        return (_deviation_welfare(params, frozen, pi + h)
                - _deviation_welfare(params, frozen, pi - h)) / (2.0 * h)

    return _slope_root(slope, pi_expected, 0.05, label="deviation slope")


@dataclass(frozen=True)
class DiscretionResult:
    """Commitment vs discretion comparison.

    bias is the raw gap pi_D - pi_C.  bias_mpr subtracts the riskless
    value of the same gap, isolating the part driven by portfolio
    anticipation (it is zero when all agents hold identical portfolios);
    the riskless gap itself reflects price-anticipation channels that are
    present even with a single portfolio.
    """
    pi_discretion: float
    pi_commitment: float
    bias: float
    bias_mpr: float
    bias_riskless: float
    var_mpr: float
    rp_discretion: float
    rp_commitment: float
    iterations: int
    rp_ordering_ok: bool


def _discretion_gap(params, tol, max_iter):
    pi_c, eq_c = commitment_optimum(params)
    pi = pi_c
    its = 0
    converged = False
    for its in range(1, max_iter + 1):
        nxt = best_response_inflation(params, pi)
        if abs(nxt - pi) < tol:
            pi = nxt
            converged = True
            break
        pi = 0.5 * (pi + nxt)  # mild damping for stability

    if not converged:
        def displacement(x):
            return best_response_inflation(params, x) - x

        lo, hi = pi_c - 0.5, pi_c + 0.5
        if displacement(lo) * displacement(hi) > 0.0:
            raise PolicyError("best-response fixed point not bracketed")
        pi = brentq(displacement, lo, hi, xtol=tol)
    return float(pi), float(pi_c), eq_c, its


def discretion_fixed_point(params: TwoPeriodParams,
                           tol: float = 1e-10,
                           max_iter: int = 200) -> DiscretionResult:
    """Commitment and discretionary price levels and the inflation bias.

    The discretionary solution is the fixed point of the best-response
    map (positions contracted at the expected price, policy re-optimized
    ex post), iterated directly and falling back to bisection on the
    displacement of the map when simple iteration cycles.  The same
    computation on the riskless economy provides the benchmark used to
    isolate the portfolio-anticipation component of the bias.
    """
    pi_d, pi_c, eq_c, its = _discretion_gap(params, tol, max_iter)
    if params.sigma > 0.0:
        pi_d0, pi_c0, _, _ = _discretion_gap(params.with_(sigma=0.0),
                                             tol, max_iter)
        bias_riskless = pi_d0 - pi_c0
        var_mpr = float(np.var(eq_c.portfolio_share))
    else:
        bias_riskless = pi_d - pi_c
        var_mpr = 0.0
    eq_d = solve_with_price_level(params, float(np.exp(pi_d)))
    rp_d, rp_c = eq_d.risk_premium, eq_c.risk_premium
    bias = pi_d - pi_c
    return DiscretionResult(pi_discretion=pi_d, pi_commitment=pi_c,
                            bias=float(bias),
                            bias_mpr=float(bias - bias_riskless),
                            bias_riskless=float(bias_riskless),
                            var_mpr=var_mpr,
                            rp_discretion=float(rp_d),
                            rp_commitment=float(rp_c),
                            iterations=its,
                            rp_ordering_ok=bool(rp_d >= rp_c - 1e-12))
