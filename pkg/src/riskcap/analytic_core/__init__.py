"""Two-period economy: exact oracle, sufficient statistics, and policy experiments."""

from .params import TwoPeriodParams, TwoPeriodEquilibrium, baseline_two_agent
from .oracle import (OracleError, solve_two_period_oracle,
                     solve_with_price_level, solve_flexible_wage,
                     calibrate_baseline, rebuild_core)
from .stats import (effective_risk_aversion, mpr_of, marginal_risk_capacity,
                    risk_premium_sensitivity, real_effects,
                    welfare_decomposition, oracle_exposures, oracle_mprs,
                    oracle_rp_slope, welfare)
from .policy import (gamma_star, target_criterion_eval, planner_gammas,
                     commitment_optimum, separation_allocation,
                     discretion_fixed_point)

__all__ = [
    "TwoPeriodParams", "TwoPeriodEquilibrium", "baseline_two_agent",
    "OracleError", "solve_two_period_oracle", "solve_with_price_level",
    "solve_flexible_wage", "calibrate_baseline", "rebuild_core",
    "effective_risk_aversion", "mpr_of", "marginal_risk_capacity",
    "risk_premium_sensitivity", "real_effects", "welfare_decomposition",
    "oracle_exposures", "oracle_mprs", "oracle_rp_slope", "welfare",
    "gamma_star", "target_criterion_eval", "planner_gammas",
    "commitment_optimum", "separation_allocation", "discretion_fixed_point",
]
