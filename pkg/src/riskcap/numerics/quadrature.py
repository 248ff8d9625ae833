"""Gauss-Hermite quadrature and mixed continuous/discrete expectation rules.

Conventions: all Gauss-Hermite rules are returned in *probabilists'* form,
i.e. nodes/weights integrate against the standard normal density and the
weights sum to one.  Shock-specific rules rescale nodes by the shock standard
deviation.  The economy's composite rule is the tensor product of the
continuous rules with a two-point discrete rule for the disaster indicator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights exact for polynomials of degree <= 2n-1 under N(0,1).

    Obtained from the physicists' rule by the change of variables
    x = sqrt(2) t, w -> w / sqrt(pi).
    """
    if n < 1:
        raise ValueError("need at least one node")
    if n > 64:
        raise ValueError("n > 64 unsupported (weights underflow)")
    t, w = np.polynomial.hermite.hermgauss(n)
    nodes = np.sqrt(2.0) * t
    weights = w / np.sqrt(np.pi)
    # enforce exact normalization (hermgauss is accurate to ~1e-16 already)
    weights = weights / weights.sum()
    return nodes, weights


@dataclass
class QuadratureRule:
    """Tensor-product expectation rule over (eps_z, eps_p, eps_m, disaster).

    Fields
    ------
    eps_z, eps_p, eps_m : flat arrays of shock realizations per node
    disaster : flat 0/1 array (1 = disaster realized)
    base_weights : product of the Gauss-Hermite weights; the disaster
        probability is state dependent, so weights(p) must be formed per
        state via :meth:`weights`.
    """

    eps_z: np.ndarray
    eps_p: np.ndarray
    eps_m: np.ndarray
    disaster: np.ndarray
    base_weights: np.ndarray
    phi_disaster: float

    @classmethod
    def build(
        cls,
        sigma_z: float,
        sigma_p: float,
        sigma_m: float,
        phi_disaster: float,
        n_z: int = 5,
        n_p: int = 5,
        n_m: int = 5,
        include_disaster: bool = True,
        include_m: bool = True,
    ) -> "QuadratureRule":
        nz, wz = gauss_hermite(n_z if sigma_z > 0 else 1)
        np_, wp = gauss_hermite(n_p if sigma_p > 0 else 1)
        if include_m and sigma_m > 0:
            nm, wm = gauss_hermite(n_m)
        else:
            nm, wm = np.zeros(1), np.ones(1)
        nd = np.array([0.0, 1.0]) if include_disaster else np.array([0.0])

        Z, P, M, D = np.meshgrid(nz, np_, nm, nd, indexing="ij")
        WZ, WP, WM, _ = np.meshgrid(wz, wp, wm, np.ones_like(nd), indexing="ij")
        return cls(
            eps_z=(sigma_z * Z).ravel(),
            eps_p=(sigma_p * P).ravel(),
            eps_m=(sigma_m * M).ravel() if include_m else np.zeros(Z.size),
            disaster=D.ravel(),
            base_weights=(WZ * WP * WM).ravel(),
            phi_disaster=phi_disaster,
        )

    @property
    def n_nodes(self) -> int:
        return self.eps_z.size

    @property
    def phi(self) -> np.ndarray:
        """Per-node disaster log-depth (phi_t in the growth factor)."""
        return self.phi_disaster * self.disaster

    def weights(self, p) -> np.ndarray:
        """State-dependent node weights for disaster probability ``p``.

        ``p`` may be a scalar or an array of states; the result broadcasts to
        shape ``(*p.shape, n_nodes)`` and sums to one along the last axis.
        """
        p = np.asarray(p, dtype=float)
        prob = np.where(self.disaster > 0.5, p[..., None], 1.0 - p[..., None])
        if self.disaster.max() < 0.5:  # disaster excluded from the rule
            prob = np.ones_like(prob)
        return self.base_weights * prob
