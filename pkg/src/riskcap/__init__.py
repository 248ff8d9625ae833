"""riskcap: global solver and policy laboratory for a heterogeneous-agent
New Keynesian economy with endogenous risk premia.

Subpackages
-----------
numerics   : grids, Chebyshev interpolation, quadrature, damped Newton,
             derivative-free optimization.
twoperiod  : closed-form two-period economy plus an exact numerical oracle.
economy    : the infinite-horizon stationary-transformed economy as a pure
             residual system.
solvers    : regime solvers (rule-based competitive equilibrium, commitment,
             discretion, simple-rule optimizer) and the wedge decomposition.
simlab     : simulation, welfare accounting, and diagnostics.
cli        : experiment orchestration (``python -m riskcap`` / ``riskcap``).
"""

__version__ = "0.1.0"
