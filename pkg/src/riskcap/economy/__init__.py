"""Infinite-horizon production economy: calibration, steady state, residuals."""

from .calibration import (Calibration, GroupSpec, baseline_calibration,
                          equal_gamma_calibration, fifteen_type_calibration,
                          rank_calibration)
from .shocks import build_quadrature, draw_shocks, shock_transition
from .steady import SteadyState, deterministic_steady
from .within import Layout, RuleParams, WithinBlock

__all__ = [
    "Calibration", "GroupSpec", "baseline_calibration",
    "equal_gamma_calibration", "fifteen_type_calibration", "rank_calibration",
    "build_quadrature", "draw_shocks", "shock_transition",
    "SteadyState", "deterministic_steady",
    "Layout", "RuleParams", "WithinBlock",
]
