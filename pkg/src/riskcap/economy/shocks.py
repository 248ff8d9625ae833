"""Exogenous shock block: quadrature assembly, transitions, simulation draws.

Three aggregate shocks drive the economy: a unit-root productivity innovation
eps_z, an AR(1) log disaster-probability innovation eps_p, and an iid policy
shock eps_m, plus a binary disaster indicator realized with the current
state's probability p.  Expectations integrate over (eps_z, eps_p, disaster)
with Gauss-Hermite rules; the policy shock is iid with zero mean, so inside
expectations next period's shock state is its mean (m' = 1) and eps_m is only
realized along simulated paths.
"""

from __future__ import annotations

import numpy as np

from ..numerics import QuadratureRule


def build_quadrature(cal, n_z: int = 5, n_p: int = 5) -> QuadratureRule:
    """Expectation rule over (eps_z, eps_p, disaster) for calibration ``cal``."""
    return QuadratureRule.build(
        sigma_z=cal.sigma_z,
        sigma_p=cal.sigma_p,
        sigma_m=cal.sigma_m,
        phi_disaster=cal.varphi,
        n_z=n_z,
        n_p=n_p,
        include_disaster=True,
        include_m=False,
    )


def p_next(cal, p, eps_p):
    """log p' = (1-rho_p) log p_bar + rho_p log p + eps_p."""
    return np.exp(
        (1.0 - cal.rho_p) * np.log(cal.p_bar)
        + cal.rho_p * np.log(np.asarray(p))
        + np.asarray(eps_p)
    )


def m_next(cal, m, eps_m):
    """log m' = rho_m log m + eps_m."""
    return np.exp(cal.rho_m * np.log(np.asarray(m)) + np.asarray(eps_m))


def shock_transition(cal, state, draw):
    """Advance the exogenous components of ``state`` for one ``draw``.

    ``state`` is (k_scaled, w_scaled, s_a, s_c, p, m) as a mapping or array;
    ``draw`` provides eps_z, eps_p, eps_m, disaster (0/1).  Returns the
    detrending factor applied to scaled stocks plus the new (p, m):
    endogenous next-period stocks are handled by the equilibrium block.
    """
    p = state["p"] if isinstance(state, dict) else np.asarray(state)[..., 4]
    m = state["m"] if isinstance(state, dict) else np.asarray(state)[..., 5]
    eps_z = np.asarray(draw["eps_z"])
    phi = cal.varphi * np.asarray(draw["disaster"])
    return {
        "detrend": np.exp(-eps_z),  # scaled stocks divide by e^{eps_z}
        "growth": np.exp(eps_z + phi),
        "phi": phi,
        "p": p_next(cal, p, draw["eps_p"]),
        "m": m_next(cal, m, draw["eps_m"]),
    }


def draw_shocks(cal, n_periods: int, n_paths: int = 1, seed: int = 0):
    """Simulation innovations, shape (n_paths, n_periods) per component.

    The disaster indicator is realized by comparing an independent uniform
    draw to the state-dependent probability, so the same seed yields common
    random numbers across policy regimes (the uniform is regime-invariant
    even when the endogenous p path differs slightly).
    """
    rng = np.random.default_rng(seed)
    return {
        "eps_z": cal.sigma_z * rng.standard_normal((n_paths, n_periods)),
        "eps_p": cal.sigma_p * rng.standard_normal((n_paths, n_periods)),
        "eps_m": cal.sigma_m * rng.standard_normal((n_paths, n_periods)),
        "uniform": rng.random((n_paths, n_periods)),
    }
