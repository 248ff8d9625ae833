"""Recursive preferences with a balanced-growth labor disutility aggregator.

Households rank consumption/labor streams with an Epstein-Zin recursion over
the composite c * Phi(l).  Phi is chosen so that preferences admit balanced
growth for any intertemporal elasticity psi and collapse to the additive
log c - thetabar l^{1+1/theta}/(1+1/theta) form at psi = 1; both the
aggregator and the stochastic discount factor are continuous in psi across 1
(the psi = 1 branches are exact limits, not separate assumptions).

All functions are elementwise and broadcast over NumPy arrays.
"""

from __future__ import annotations

import numpy as np


def _labor_term(l, theta_bar, theta):
    """thetabar * l^{1+1/theta} / (1+1/theta)."""
    ex = 1.0 + 1.0 / theta
    return theta_bar * np.asarray(l) ** ex / ex


def phi_disutility(l, theta_bar, psi, theta):
    """Composite-consumption labor aggregator Phi(l), decreasing in l."""
    L = _labor_term(l, theta_bar, theta)
    if abs(psi - 1.0) < 1e-12:
        return np.exp(-L)
    a = 1.0 / psi - 1.0
    base = 1.0 + a * L
    if np.any(base <= 0.0):
        raise ValueError("labor disutility outside the admissible range")
    return base ** ((1.0 / psi) / (1.0 - 1.0 / psi))


def mrs(c, l, theta_bar, psi, theta):
    """Consumption-labor marginal rate of substitution -u_l/u_c = -c Phi'/Phi."""
    L = _labor_term(l, theta_bar, theta)
    ml = theta_bar * np.asarray(l) ** (1.0 / theta)  # dL/dl
    if abs(psi - 1.0) < 1e-12:
        return c * ml
    a = 1.0 / psi - 1.0
    # d log Phi / dl = (1/psi)/(1-1/psi) * a * ml / (1 + a L) = -(1/psi) ml/(1+aL)
    return c * (1.0 / psi) * ml / (1.0 + a * L)


def ez_value_update(c_phi, ce, beta, psi):
    """One step of the value recursion given the certainty equivalent ``ce``."""
    c_phi = np.asarray(c_phi, dtype=float)
    ce = np.asarray(ce, dtype=float)
    if abs(psi - 1.0) < 1e-12:
        return c_phi ** (1.0 - beta) * ce**beta
    rho = 1.0 - 1.0 / psi
    return ((1.0 - beta) * c_phi**rho + beta * ce**rho) ** (1.0 / rho)


def certainty_equivalent(v_next, weights, gamma, axis=-1):
    """(E[v^{1-gamma}])^{1/(1-gamma)} along ``axis`` (log-sum-exp form)."""
    v_next = np.asarray(v_next, dtype=float)
    if np.any(v_next <= 0.0):
        raise ValueError("value function must be positive")
    one_mg = 1.0 - gamma
    logv = np.log(v_next)
    shift = np.max(one_mg * logv, axis=axis, keepdims=True)
    mean = np.sum(weights * np.exp(one_mg * logv - shift), axis=axis)
    return np.exp((np.log(mean) + np.squeeze(shift, axis=axis)) / one_mg)


def ez_value_steady(c_phi, mu, beta, psi):
    """Fixed point of the recursion when next period repeats today (scaled)."""
    c_phi = np.asarray(c_phi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if abs(psi - 1.0) < 1e-12:
        # log V = (1-beta) log(c Phi) + beta (log mu + log V)
        return np.exp(np.log(c_phi) + beta * np.log(mu) / (1.0 - beta))
    rho = 1.0 - 1.0 / psi
    scale = beta * mu**rho
    if np.any(scale >= 1.0):
        raise ValueError("value recursion has no finite fixed point")
    return ((1.0 - beta) * c_phi**rho / (1.0 - scale)) ** (1.0 / rho)


def sdf_kernel(c_phi_now, c_phi_next, v_hat_next, ce, psi, gamma):
    """Stochastic discount factor kernel (excludes beta(1-xi)).

    ``v_hat_next`` is the continuation value in current-trend units
    (detrended value times realized growth, survivor-adjusted); ``ce`` is its
    certainty equivalent under the same measure.  The consumption ratio is in
    the same units as ``v_hat_next`` (i.e. include realized growth in
    ``c_phi_next`` before calling, or equivalently multiply the result by the
    growth adjustment separately).
    """
    ratio = np.asarray(c_phi_next) / np.asarray(c_phi_now)
    m = ratio ** (-1.0 / psi)
    ex = 1.0 / psi - gamma
    if abs(ex) > 1e-14:
        m = m * (np.asarray(v_hat_next) / np.asarray(ce)) ** ex
    return m
