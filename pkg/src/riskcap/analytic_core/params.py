"""Parameter and equilibrium containers for the two-period economy.

Agents are a finite set of types with equal population measure 1/n.  Nominal
bonds are in zero net supply; period-(-1) positions are per-capita type
positions.  ``pareto_weights`` only enter welfare evaluations, never the
competitive equilibrium itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass
class TwoPeriodParams:
    beta: float
    gammas: np.ndarray
    theta: float
    theta_bar: float
    alpha: float
    chi_x: float
    sigma: float
    phi: float
    initial_bonds: np.ndarray
    initial_capital: np.ndarray
    pareto_weights: np.ndarray
    delta0: float = 0.025          # period-0 depreciation on legacy capital
    i_bar: float = 0.0             # rule intercept (set by calibrate_baseline)
    w_minus1: float = 1.0          # rigid reference nominal wage, P_{-1} = 1
    n_quad: int = 21               # Gauss-Hermite nodes for the exact FOC

    def __post_init__(self):
        self.gammas = np.atleast_1d(np.asarray(self.gammas, dtype=float))
        self.initial_bonds = np.atleast_1d(np.asarray(self.initial_bonds, dtype=float))
        self.initial_capital = np.atleast_1d(np.asarray(self.initial_capital, dtype=float))
        self.pareto_weights = np.atleast_1d(np.asarray(self.pareto_weights, dtype=float))
        n = self.gammas.size
        if not 0 < self.beta < 1:
            raise ValueError("beta must be in (0,1)")
        if np.any(self.gammas <= 0):
            raise ValueError("risk aversions must be positive")
        if self.theta <= 0 or self.theta_bar <= 0:
            raise ValueError("theta, theta_bar must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0,1)")
        if self.chi_x < 0:
            raise ValueError("chi_x must be >= 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.phi <= 1:
            raise ValueError("Taylor coefficient must exceed 1")
        for arr, name in [(self.initial_bonds, "initial_bonds"),
                          (self.initial_capital, "initial_capital"),
                          (self.pareto_weights, "pareto_weights")]:
            if arr.size != n:
                raise ValueError(f"{name} length must match gammas")
        if abs(self.initial_bonds.sum()) > 1e-12:
            raise ValueError("initial bonds must sum to zero (zero net supply)")
        if np.any(self.pareto_weights < 0) or not np.any(self.pareto_weights > 0):
            raise ValueError("pareto weights must be >= 0 and not all zero")
        if not np.all(np.isfinite(self.pareto_weights)):
            raise ValueError("pareto weights must be finite")

    @property
    def n_agents(self) -> int:
        return self.gammas.size

    @property
    def k_agg(self) -> float:
        return float(self.initial_capital.mean())

    @property
    def weights_norm(self) -> np.ndarray:
        return self.pareto_weights / self.pareto_weights.sum()

    def with_(self, **kw) -> "TwoPeriodParams":
        return replace(self, **kw)


@dataclass
class TwoPeriodEquilibrium:
    price_level: float
    capital: float                  # k0
    consumption: np.ndarray         # c0 per agent
    portfolio_share: np.ndarray     # omega0 per agent (NaN when degenerate)
    savings_share: np.ndarray       # s0 per agent, sums to 1
    q0: float
    risk_premium: float             # E0 log(1+r_k) - log(1+r)
    labor: float
    output: float
    # extras used by the policy experiments
    i0: float = 0.0
    wealth: np.ndarray = None       # n0 per agent
    savings: np.ndarray = None      # a0 per agent
    bonds: np.ndarray = None        # real chosen bonds b0 per agent
    log_values: np.ndarray = None   # log v^i
    degenerate_portfolio: bool = False
    residual_norm: float = np.nan
    clearing_residuals: dict = field(default_factory=dict)

    @property
    def pi0(self) -> float:
        return float(np.log(self.price_level))


def baseline_two_agent(sigma: float = 0.01, negishi: bool = True) -> TwoPeriodParams:
    """Two-agent baseline used throughout the analytic checks.

    Agent a: low risk aversion, levered (short bonds, long capital).
    Agent b: high risk aversion, wealthier, long bonds.  The Taylor
    intercept, labor disutility, and (optionally) Negishi welfare weights
    are internally calibrated so that the no-shock equilibrium has
    P0 = 1, l0 = 1 and a zero labor wedge.
    """
    from .oracle import calibrate_baseline

    # discount factor chosen so that at (q0, k0, labor) = (1, k_bar, 1) the
    # desired savings beta * wealth exactly equal the value of the risky
    # claims k_bar/alpha: the no-shock equilibrium then sits at unit prices
    alpha, delta0, k_bar = 0.33, 0.025, 1.0
    beta = (k_bar / alpha) / (k_bar ** alpha + (1.0 - delta0) * k_bar
                              + (1.0 - alpha) * k_bar / alpha)
    params = TwoPeriodParams(
        beta=beta,
        gammas=np.array([10.0, 25.5]),
        theta=1.0,
        theta_bar=1.0,           # recalibrated below
        alpha=0.33,
        chi_x=3.5,
        sigma=sigma,
        phi=1.5,
        initial_bonds=np.array([-0.45, 0.45]),
        initial_capital=np.array([0.9, 1.1]),
        pareto_weights=np.array([0.5, 0.5]),
    )
    return calibrate_baseline(params, negishi=negishi)
