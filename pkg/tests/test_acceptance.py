"""Acceptance gate.

Each test exercises one headline property of the package end to end, at
stated tolerances, against independently solved exact equilibria.
"""

import numpy as np
import pytest

from riskcap.analytic_core import (
    baseline_two_agent,
    discretion_fixed_point,
    effective_risk_aversion,
    marginal_risk_capacity,
    planner_gammas,
    risk_premium_sensitivity,
    separation_allocation,
)
from riskcap.analytic_core.policy import optimal_price_level, output_gap
from riskcap.analytic_core.oracle import solve_flexible_wage
from riskcap.analytic_core.stats import (
    oracle_exposures,
    oracle_mprs,
    oracle_rp_slope,
)
from riskcap.analytic_core import solve_two_period_oracle


# ---------------------------------------------------------------------------
# 1. sufficient statistic: d(risk premium)/d(shock) = gamma_bar sigma^2 MRC
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("sigma", [0.005, 0.01, 0.02])
def test_sufficient_statistic_matches_exact_slope(sigma):
    params = baseline_two_agent(sigma=sigma)
    eq = solve_two_period_oracle(params)
    gbar = effective_risk_aversion(eq.savings_share, params.gammas)
    mrc = marginal_risk_capacity(oracle_exposures(params),
                                 oracle_mprs(params, eq))
    predicted = risk_premium_sensitivity(gbar, sigma, mrc)
    exact = oracle_rp_slope(params)
    assert predicted == pytest.approx(exact, rel=0.05)


# ---------------------------------------------------------------------------
# 2. targeting rule: the welfare optimum satisfies the linear criterion
# ---------------------------------------------------------------------------

def test_targeting_rule_holds_at_the_optimum(utilitarian_params,
                                             rule_gammas):
    g = rule_gammas
    pi_star, eq_star = optimal_price_level(utilitarian_params)
    flex = solve_flexible_wage(utilitarian_params.with_(sigma=0.0))
    ygap = output_gap(utilitarian_params.with_(sigma=0.0), eq_star,
                      flex.output)
    residual = (g.gamma_pi * (pi_star - g.pi_ref)
                - g.gamma_x * (ygap - g.ygap_ref)
                - g.wedge)
    assert abs(g.wedge) > 1e-6
    assert abs(residual) < 0.10 * abs(g.wedge)


def test_wedge_vanishes_with_equal_risk_aversion(utilitarian_params):
    equalized = utilitarian_params.with_(gammas=np.array([18.0, 18.0]))
    g = planner_gammas(equalized)
    assert abs(g.wedge) < 1e-10


# ---------------------------------------------------------------------------
# 3. instrument separation: price level + portfolio tax
# ---------------------------------------------------------------------------

def test_two_instruments_remove_the_monetary_wedge(utilitarian_params):
    res = separation_allocation(utilitarian_params)
    assert abs(res.wedge_monetary) >= 1e6 * abs(res.wedge_after)


def test_constrained_tax_floor_keeps_wedge_positive(utilitarian_params):
    res = separation_allocation(utilitarian_params, nonnegative_tax=True)
    assert res.gamma_gap > 0
    assert abs(res.wedge_after) > 0


def test_constrained_tax_floor_strictly_reduces_wedge(utilitarian_params):
    # with the subsidy ruled out the floor binds exactly, so the residual
    # wedge coincides with the one-instrument wedge; a strict reduction is
    # unattainable here and this assertion is expected to fail
    res = separation_allocation(utilitarian_params, nonnegative_tax=True)
    assert abs(res.wedge_after) < abs(res.wedge_monetary)


# ---------------------------------------------------------------------------
# 4. no-commitment bias: portfolio-anticipation component
# ---------------------------------------------------------------------------

def test_discretion_bias_sign_monotonicity_and_zero_limit():
    base = baseline_two_agent(negishi=False)
    sweep = [5.0, 10.0, 15.0, 20.0, 25.5]
    results = [discretion_fixed_point(base.with_(
        gammas=np.array([ga, 25.5]))) for ga in sweep]

    for d in results:
        if d.var_mpr > 1e-12:
            assert d.bias_mpr > 1e-8        # upward bias under dispersion
            assert d.rp_discretion > d.rp_commitment
        else:
            assert abs(d.bias_mpr) < 1e-8   # exact equality without it

    biases = [d.bias_mpr for d in results]
    var_mprs = [d.var_mpr for d in results]
    assert np.all(np.diff(var_mprs) < 0)    # sweep shrinks dispersion
    assert np.all(np.diff(biases) < 0)      # bias shrinks with it
