"""Approximation and root-finding toolbox."""

from .cheb import Grid, Interpolant, cheb_nodes, fit_eval
from .kernel import KERNEL_BACKEND
from .newton import SolveReport, newton_batched, newton_damped
from .optimize import OptimizeTrace, golden_section, minimize_derivative_free
from .quadrature import QuadratureRule, gauss_hermite

__all__ = [
    "Grid", "Interpolant", "cheb_nodes", "fit_eval", "KERNEL_BACKEND",
    "SolveReport", "newton_batched", "newton_damped",
    "OptimizeTrace", "golden_section", "minimize_derivative_free",
    "QuadratureRule", "gauss_hermite",
]
