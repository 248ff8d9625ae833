"""Unit tests for the planner layer: targeting rule, two-instrument
allocation, and the no-commitment fixed point."""

import numpy as np
import pytest

from riskcap.analytic_core import (
    commitment_optimum,
    discretion_fixed_point,
    gamma_star,
    separation_allocation,
    solve_two_period_oracle,
    target_criterion_eval,
)
from riskcap.analytic_core.policy import (
    PolicyError,
    best_response_inflation,
    deterministic_optimal_inflation,
    optimal_price_level,
    planner_allocation,
)
from riskcap.analytic_core.oracle import rebuild_core


class TestPlannerBenchmarks:
    def test_gamma_star_is_harmonic_mean_at_uniform_weights(
            self, utilitarian_params):
        g = utilitarian_params.gammas
        harm = 1.0 / (1.0 / g).mean()
        assert gamma_star(utilitarian_params) == pytest.approx(harm,
                                                               rel=1e-9)

    @staticmethod
    def _equal_weight_welfare(params, eq, c0, c1):
        qw = rebuild_core(params, eq)["qw"]
        total = 0.0
        for i, g in enumerate(params.gammas):
            log_ce = np.log((qw * c1[i] ** (1.0 - g)).sum()) / (1.0 - g)
            total += (1.0 - params.beta) * np.log(c0[i]) + params.beta * log_ce
        return total / params.n_agents

    def test_planner_reallocation_feasible_and_improving(
            self, utilitarian_params, utilitarian_eq):
        p, eq = utilitarian_params, utilitarian_eq
        core = rebuild_core(p, eq)
        c0, c1 = planner_allocation(p, eq)
        assert c0.mean() == pytest.approx(core["c0"].mean(), rel=1e-9)
        assert c1.mean(axis=0) == pytest.approx(core["c1"].mean(axis=0),
                                                rel=1e-9)
        w_market = self._equal_weight_welfare(p, eq, core["c0"], core["c1"])
        w_plan = self._equal_weight_welfare(p, eq, c0, c1)
        assert w_plan > w_market - 1e-12

    def test_planner_blend_between_extreme_risk_aversions(
            self, utilitarian_params):
        gs = gamma_star(utilitarian_params)
        g = utilitarian_params.gammas
        assert g.min() < gs < g.max()


class TestTargetingRule:
    def test_reference_point_is_deterministic_optimum(self, rule_gammas,
                                                      utilitarian_params):
        pi_ref = deterministic_optimal_inflation(utilitarian_params)
        assert rule_gammas.pi_ref == pytest.approx(pi_ref, abs=1e-10)
        assert rule_gammas.pi_ref == pytest.approx(0.0106343, abs=1e-6)

    def test_coefficients_frozen_values(self, rule_gammas):
        g = rule_gammas
        assert g.gamma_pi == pytest.approx(0.163411, rel=1e-3)
        assert g.gamma_x == pytest.approx(1.586178, rel=1e-3)
        assert g.gamma_rp == pytest.approx(-2.479051, rel=1e-3)
        assert g.gamma_bar == pytest.approx(15.3135, rel=1e-3)
        assert g.gamma_star == pytest.approx(14.3662, rel=1e-6)
        assert g.mrc == pytest.approx(0.0456051, rel=1e-3)
        assert g.wedge == pytest.approx(-1.0710e-5, rel=1e-3)

    def test_eval_requires_positive_coefficients(self):
        with pytest.raises(PolicyError):
            target_criterion_eval(0.0, 0.0, 0.05, 15.0, 14.0, 0.01,
                                  (0.16, 1.59, -2.48))

    def test_eval_linear_form(self):
        res = target_criterion_eval(0.02, 0.01, 0.05, 15.0, 14.0, 0.01,
                                    (0.5, 1.5, 2.0))
        wedge = 2.0 * 0.05 * 1.0 * 0.01 ** 2
        assert res == pytest.approx(0.5 * 0.02 - 1.5 * 0.01 - wedge)


class TestCommitment:
    def test_optimum_near_riskless_reference(self, utilitarian_params,
                                             rule_gammas):
        pi_c, eq = commitment_optimum(utilitarian_params)
        # risk moves the optimum by O(sigma^2), a few 1e-6 here
        assert abs(pi_c - rule_gammas.pi_ref) < 2e-5
        assert eq.price_level == pytest.approx(np.exp(pi_c), rel=1e-12)

    def test_negishi_optimum_is_rule_equilibrium(self, negishi_params,
                                                 negishi_eq):
        pi_c, _ = commitment_optimum(negishi_params)
        assert abs(pi_c - negishi_eq.pi0) < 1e-6


class TestSeparation:
    def test_subsidy_when_market_overweights_risk_takers(
            self, utilitarian_params):
        res = separation_allocation(utilitarian_params)
        assert res.gamma_gap > 0            # gamma_bar above planner blend
        assert res.tau_k < 0                # optimal instrument is a subsidy
        assert abs(res.tau_k) == pytest.approx(4.034e-4, rel=1e-2)
        assert not res.binding

    def test_joint_optimum_restores_price_reference(self, utilitarian_params,
                                                    rule_gammas):
        res = separation_allocation(utilitarian_params)
        assert res.pi0 == pytest.approx(rule_gammas.pi_ref, abs=1e-6)

    def test_nonnegativity_floor_binds(self, utilitarian_params):
        res = separation_allocation(utilitarian_params, nonnegative_tax=True)
        assert res.constrained and res.binding
        assert res.tau_k == 0.0
        assert res.wedge_after == res.wedge_monetary


class TestDiscretion:
    def test_best_response_consistent_at_negishi_optimum(
            self, negishi_params):
        pi_c, _ = optimal_price_level(negishi_params)
        br = best_response_inflation(negishi_params, pi_c)
        assert br == pytest.approx(pi_c, abs=1e-8)

    def test_fixed_point_and_premium_ordering(self, utilitarian_params):
        d = discretion_fixed_point(utilitarian_params)
        # portfolio-anticipation component of the bias is positive with
        # heterogeneous marginal propensities to take risk
        assert d.var_mpr > 0
        assert d.bias_mpr > 0
        assert d.rp_discretion > d.rp_commitment
        assert d.rp_ordering_ok
        # the no-commitment equilibrium is its own best response
        br = best_response_inflation(utilitarian_params, d.pi_discretion)
        assert br == pytest.approx(d.pi_discretion, abs=1e-8)
