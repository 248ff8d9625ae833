"""Regime solvers: rule equilibria, commitment, discretion, rule optimizer."""

from .surfaces import PolicySurface, build_surface, residual_audit
from .time_iteration import (calibrate_rule_intercept, inner_period_solve,
                             solve_competitive_equilibrium)

__all__ = [
    "PolicySurface", "build_surface", "residual_audit",
    "calibrate_rule_intercept", "inner_period_solve",
    "solve_competitive_equilibrium",
]
