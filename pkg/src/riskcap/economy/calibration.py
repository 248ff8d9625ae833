"""Calibration containers for the infinite-horizon production economy.

The economy consists of population groups that differ in risk aversion,
labor allocation weights, transfer shares, newborn wealth endowments, and
portfolio constraints.  ``Calibration`` collects the aggregate block
(technology, nominal rigidity, shock processes, policy rule) together with
the list of ``GroupSpec`` entries; both are plain frozen dataclasses with
JSON round-trip helpers so run manifests can embed the exact parameterization.

Constructors provided:

``baseline_calibration``       three groups (small high-risk-tolerance group,
                               large intermediate group, constrained majority
                               holding a fixed capital position).
``rank_calibration``           single unconstrained group; collapses the model
                               to its representative-agent counterpart.
``equal_gamma_calibration``    baseline demographics with one common risk
                               aversion (risk-capacity channel shut down).
``fifteen_type_calibration``   finer partition of the population used for
                               heterogeneity-robustness sweeps.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

MODES = ("unconstrained", "capital-floor", "leverage-constrained")


@dataclass(frozen=True)
class GroupSpec:
    """One population group: preferences, endowments, and portfolio regime."""

    lam: float                 # population measure
    gamma: float               # relative risk aversion
    phi_labor: float           # per-capita labor allocation weight
    nu: float                  # share of the public bond position
    s_bar: float               # newborn cohort's wealth share endowment
    theta_bar: float = 1.0     # labor disutility scale (set by steady-state fit)
    mode: str = "unconstrained"
    k_floor: float = float("nan")     # capital-floor mode only
    leverage_cap: float = float("nan")  # leverage-constrained mode only
    idio_income_var: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.lam <= 1.0):
            raise ValueError(f"group measure must be in (0, 1], got {self.lam}")
        if self.gamma <= 0.0:
            raise ValueError(f"risk aversion must be positive, got {self.gamma}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.mode == "capital-floor" and not np.isfinite(self.k_floor):
            raise ValueError("capital-floor mode needs a finite k_floor")
        if self.mode == "leverage-constrained" and not (
            np.isfinite(self.leverage_cap) and self.leverage_cap > 0
        ):
            raise ValueError("leverage-constrained mode needs leverage_cap > 0")
        if self.idio_income_var < 0.0:
            raise ValueError("idio_income_var must be nonnegative")


@dataclass(frozen=True)
class Calibration:
    """Aggregate parameters plus the population group list.

    All rates are quarterly.  ``taylor_intercept`` is the nominal-rate
    intercept of the policy rule; it is fitted so that the ergodic mean of
    inflation is (approximately) zero, see ``steady.fit_intercept``.
    """

    psi: float = 0.8            # intertemporal elasticity of substitution
    theta: float = 1.0          # Frisch elasticity
    alpha: float = 0.33
    delta: float = 0.025
    phi: float = 1.5            # policy-rule inflation coefficient
    xi: float = 0.01            # death probability
    p_bar: float = 0.0037       # disaster probability: unconditional median
    sigma_p: float = 0.47
    rho_p: float = 0.80
    varphi: float = -0.15       # disaster log-depth
    epsilon_elast: float = 10.0  # labor substitution elasticity
    chi_W: float = 150.0        # wage adjustment cost
    sigma_m: float = 0.000625
    rho_m: float = 0.0
    sigma_z: float = 0.0055
    chi_x: float = 3.5          # investment adjustment curvature
    beta: float = 0.98
    b_g: float = -2.7           # scaled public bond position
    taylor_intercept: float = 0.0206
    groups: tuple[GroupSpec, ...] = ()

    def __post_init__(self):
        checks = [
            (0.0 < self.beta < 1.0, "beta must lie in (0, 1)"),
            (0.0 < self.delta < 1.0, "delta must lie in (0, 1)"),
            (self.phi > 1.0, "policy-rule inflation coefficient must exceed 1"),
            (self.chi_W > 0.0, "wage adjustment cost must be positive"),
            (self.epsilon_elast > 1.0, "labor substitution elasticity must exceed 1"),
            (self.psi > 0.0, "IES must be positive"),
            (self.theta > 0.0, "Frisch elasticity must be positive"),
            (0.0 < self.alpha < 1.0, "capital share must lie in (0, 1)"),
            (0.0 <= self.xi < 1.0, "death probability must lie in [0, 1)"),
            (self.p_bar > 0.0, "disaster probability scale must be positive"),
            (abs(self.rho_p) < 1.0, "disaster-probability persistence must be stable"),
            (self.sigma_z >= 0.0, "productivity volatility must be nonnegative"),
            (self.chi_x >= 0.0, "investment adjustment curvature must be nonnegative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)
        if not self.groups:
            raise ValueError("at least one group is required")
        lam = sum(g.lam for g in self.groups)
        if abs(lam - 1.0) > 1e-10:
            raise ValueError(f"group measures must sum to 1, got {lam}")
        lab = sum(g.lam * g.phi_labor for g in self.groups)
        if abs(lab - 1.0) > 1e-10:
            raise ValueError(f"labor allocation weights must aggregate to 1, got {lab}")
        sbar = sum(g.s_bar for g in self.groups)
        if abs(sbar - 1.0) > 1e-8:
            raise ValueError(f"newborn endowment shares must sum to 1, got {sbar}")

    # ---- derived quantities -------------------------------------------
    @property
    def tau(self) -> float:
        """Labor subsidy undoing the steady-state union markup."""
        return -1.0 / (self.epsilon_elast - 1.0)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def lam(self) -> np.ndarray:
        return np.array([g.lam for g in self.groups])

    @property
    def gammas(self) -> np.ndarray:
        return np.array([g.gamma for g in self.groups])

    @property
    def phi_labor(self) -> np.ndarray:
        return np.array([g.phi_labor for g in self.groups])

    @property
    def theta_bar(self) -> np.ndarray:
        return np.array([g.theta_bar for g in self.groups])

    @property
    def s_bar(self) -> np.ndarray:
        return np.array([g.s_bar for g in self.groups])

    @property
    def nu(self) -> np.ndarray:
        return np.array([g.nu for g in self.groups])

    @property
    def rho(self) -> float:
        """Utility curvature exponent 1 - 1/psi (nonzero unless psi == 1)."""
        return 1.0 - 1.0 / self.psi

    def with_(self, **kw) -> "Calibration":
        return replace(self, **kw)

    def with_groups(self, groups) -> "Calibration":
        return replace(self, groups=tuple(groups))

    # ---- serialization -------------------------------------------------
    def to_json(self) -> str:
        d = asdict(self)
        d["groups"] = [asdict(g) for g in self.groups]
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Calibration":
        d = json.loads(text)
        groups = tuple(GroupSpec(**g) for g in d.pop("groups"))
        return cls(groups=groups, **d)


def _pooled_gamma(lams, gammas) -> float:
    """Population-weighted harmonic mean of risk aversions."""
    lams = np.asarray(lams, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    return float(lams.sum() / np.sum(lams / gammas))


def baseline_calibration(**overrides) -> "Calibration":
    """Three-group heterogeneous-capacity benchmark.

    Group a: small, risk tolerant, unconstrained (the economy's marginal
    risk bearer).  Group b: intermediate.  Group c: majority with a fixed
    capital position (capital-floor mode); its risk aversion is set to the
    population-weighted harmonic mean of the unconstrained groups so that
    shutting its constraint off is a small perturbation.
    """
    gamma_c = _pooled_gamma([0.04, 0.36], [10.0, 25.5])
    groups = (
        GroupSpec(lam=0.04, gamma=10.0, phi_labor=0.03 / 0.04, nu=0.18,
                  s_bar=0.0),
        GroupSpec(lam=0.36, gamma=25.5, phi_labor=0.14 / 0.36, nu=0.59,
                  s_bar=1.0025),
        GroupSpec(lam=0.60, gamma=gamma_c, phi_labor=0.83 / 0.60, nu=0.23,
                  s_bar=-0.0025, mode="capital-floor", k_floor=10.0),
    )
    cal = Calibration(groups=groups, **overrides)
    from .steady import fit_group_scales  # deferred: steady imports calibration

    return fit_group_scales(cal)


def rank_calibration(gamma: float = 22.0, **overrides) -> "Calibration":
    """Single-group reduction: representative agent, no constraints."""
    groups = (GroupSpec(lam=1.0, gamma=gamma, phi_labor=1.0, nu=1.0, s_bar=1.0),)
    cal = Calibration(groups=groups, **overrides)
    from .steady import fit_group_scales

    return fit_group_scales(cal)


def equal_gamma_calibration(gamma: float = 22.0, **overrides) -> "Calibration":
    """Baseline demographics with homogeneous risk aversion."""
    base = baseline_calibration(**overrides)
    groups = tuple(replace(g, gamma=gamma) for g in base.groups)
    return base.with_groups(groups)


def fifteen_type_calibration(**overrides) -> "Calibration":
    """Fifteen-group refinement preserving the baseline aggregates.

    Each baseline group is split into five equal sub-groups whose risk
    aversions fan out geometrically around the parent value (spread factor
    1.25 between adjacent sub-groups) while population, labor, transfer, and
    newborn shares are divided evenly.  Aggregate harmonic risk capacity of
    each parent group is preserved by a common rescaling.
    """
    base = baseline_calibration(**overrides)
    fan = 1.25 ** np.arange(-2, 3)
    groups = []
    for g in base.groups:
        raw = g.gamma * fan
        # rescale so the sub-groups' harmonic mean equals the parent gamma
        raw *= np.mean(1.0 / raw) * g.gamma
        for gam in raw:
            groups.append(
                replace(
                    g,
                    lam=g.lam / 5.0,
                    gamma=float(gam),
                    nu=g.nu / 5.0,
                    s_bar=g.s_bar / 5.0,
                )
            )
    cal = base.with_groups(groups)
    from .steady import fit_group_scales

    return fit_group_scales(cal)
