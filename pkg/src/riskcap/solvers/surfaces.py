"""Policy surfaces: solved equilibrium objects and their serialization.

A ``PolicySurface`` bundles the continuation interpolant used inside
expectations (per-group value and consumption, inflation, wage inflation,
capital price, employment) with a second interpolant of per-group portfolio
positions, the policy rate, and auxiliary prices, plus convergence metadata
and the off-grid residual audit.  Surfaces round-trip through ``.npz``
archives with a version header so simulation runs can be decoupled from
solves.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from ..economy.calibration import Calibration
from ..economy.within import Layout, RuleParams, WithinBlock
from ..numerics import Grid, Interpolant, fit_eval

FORMAT_VERSION = 1
REGIMES = ("taylor", "augmented_rule", "ramsey", "ramsey_zlb", "discretion")


def extra_names(layout: Layout) -> list[str]:
    names = [f"log_k_{j}" for j in layout.free_capital]
    names += [f"b_{j}" for j in range(layout.n_groups)]
    names += ["i", "log_w", "log_y", "planner_value"]
    return names


@dataclass
class PolicySurface:
    regime: str
    cal: Calibration
    grid: Grid
    cont: Interpolant
    extra: Interpolant
    rule: RuleParams | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")

    @property
    def layout(self) -> Layout:
        return Layout.build(self.cal)

    # ---- evaluation -----------------------------------------------------
    def policies(self, states) -> dict:
        """Within-period variables at ``states`` (N, dim) from the surface."""
        lo = self.layout
        states = np.atleast_2d(np.asarray(states, dtype=float))
        raw, oob = self.cont.eval(states)
        V, c, pi, piW, q, ell = lo.unpack_cont(raw)
        ex, _ = self.extra.eval(states)
        nf = len(lo.free_capital)
        n = lo.n_groups
        k_pc = np.empty((states.shape[0], n))
        for j, fv in enumerate(lo.floor_values):
            if np.isfinite(fv):
                k_pc[:, j] = fv
        for col, j in enumerate(lo.free_capital):
            k_pc[:, j] = np.exp(ex[:, col])
        return {
            "V": V, "c": c, "pi": pi, "piW": piW, "q": q, "ell": ell,
            "k_pc": k_pc, "b_pc": ex[:, nf:nf + n], "i": ex[:, nf + n],
            "w": np.exp(ex[:, nf + n + 1]), "y": np.exp(ex[:, nf + n + 2]),
            "planner_value": ex[:, nf + n + 3], "out_of_hull": oob,
        }

    def unknowns(self, states) -> np.ndarray:
        """Surface policies packed as the within-period unknown vector."""
        pol = self.policies(states)
        return self.layout.pack(pol["piW"], pol["pi"], pol["c"], pol["k_pc"],
                                pol["i"])

    # ---- serialization ---------------------------------------------------
    def save(self, path) -> None:
        header = {
            "format_version": FORMAT_VERSION,
            "regime": self.regime,
            "calibration": json.loads(self.cal.to_json()),
            "grid": {"bounds": self.grid.bounds, "n_nodes": self.grid.n_nodes,
                     "smolyak_level": self.grid.smolyak_level},
            "rule": None if self.rule is None else vars(self.rule).copy(),
            "meta": self.meta,
        }
        np.savez_compressed(
            path,
            header=np.frombuffer(json.dumps(header, default=_jsonable).encode(),
                                 dtype=np.uint8),
            cont_coeffs=self.cont.coeffs,
            extra_coeffs=self.extra.coeffs,
        )

    @classmethod
    def load(cls, path) -> "PolicySurface":
        with np.load(path) as z:
            header = json.loads(bytes(z["header"]).decode())
            if header["format_version"] != FORMAT_VERSION:
                raise ValueError(
                    f"surface format {header['format_version']} unsupported")
            cal = Calibration.from_json(json.dumps(header["calibration"]))
            gspec = header["grid"]
            grid = Grid(
                bounds=tuple(tuple(b) for b in gspec["bounds"]),
                n_nodes=None if gspec["n_nodes"] is None else tuple(gspec["n_nodes"]),
                smolyak_level=gspec["smolyak_level"],
            )
            lo = Layout.build(cal)
            cont = Interpolant(grid, z["cont_coeffs"], lo.cont_names())
            extra = Interpolant(grid, z["extra_coeffs"], extra_names(lo))
            rule = None if header["rule"] is None else RuleParams(**header["rule"])
            return cls(regime=header["regime"], cal=cal, grid=grid, cont=cont,
                       extra=extra, rule=rule, meta=header["meta"])


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj)}")


def build_surface(regime, cal, grid, block: WithinBlock, states, U, pv, diag,
                  rule=None, planner_value=None, meta=None) -> PolicySurface:
    """Assemble interpolants from converged grid-point solutions."""
    lo = block.layout
    cont_vals = lo.pack_cont(diag["V"], pv["c"], pv["pi"], pv["piW"], pv["q"],
                             pv["ell"])
    cont = fit_eval(grid, cont_vals, lo.cont_names())
    rows = [np.log(pv["k_pc"][:, j]) for j in lo.free_capital]
    rows += [pv["b_pc"][:, j] for j in range(lo.n_groups)]
    rows += [pv["i"], np.log(pv["w"]), np.log(pv["y"])]
    pval = np.zeros(states.shape[0]) if planner_value is None else planner_value
    rows += [pval]
    extra = fit_eval(grid, np.vstack(rows), extra_names(lo))
    return PolicySurface(regime=regime, cal=cal, grid=grid, cont=cont,
                         extra=extra, rule=rule, meta=meta or {})


def residual_audit(surface: PolicySurface, block: WithinBlock, n_states: int = 200,
                   seed: int = 0, rule=None, instrument_fn=None,
                   interior: float = 0.1) -> dict:
    """Equation residuals at random interior off-grid states.

    Policies are taken from the surface (no re-solve); the sup-norm over
    states and equations is the accuracy measure a surface must pass
    (< 1e-4) before simulation-side use.
    """
    rng = np.random.default_rng(seed)
    lo, hi = surface.grid.lo, surface.grid.hi
    span = hi - lo
    states = lo + (interior + (1 - 2 * interior) * rng.random(
        (n_states, surface.grid.dim))) * span
    U = surface.unknowns(states)
    kwargs = {}
    if instrument_fn is not None:
        kwargs["instrument"] = instrument_fn(states)
    else:
        kwargs["rule"] = rule if rule is not None else surface.rule
    res = block.residuals(U, states, surface.cont, n_sfp=6, **kwargs)
    # the rate equation reflects the surface's own i-interpolation error and
    # the Euler/goods rows are the accuracy-relevant ones; report both
    return {
        "max_residual": float(np.max(np.abs(res[:, :-1]))),
        "max_rate_residual": float(np.max(np.abs(res[:, -1]))),
        "mean_residual": float(np.mean(np.abs(res[:, :-1]))),
        "n_states": n_states,
    }
