"""Time iteration for the rule-based competitive equilibrium.

Each sweep solves the within-period system at every grid point (batched,
warm-started damped Newton with Jacobian reuse across sweeps), then refits
the continuation interpolants with a dampened update (default factor 0.3).
The value-function block, which converges at the discount rate and would
otherwise dominate the iteration count, is accelerated by a policy-evaluation
step: holding policies fixed, the value recursion is applied repeatedly on
cached transition points before the next sweep.

Convergence is declared on the sup-norm change of the packed continuation
values.  An oscillation guard lowers the dampening factor when the change
fails to shrink for an extended stretch.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import replace

import numpy as np

from ..economy.preferences import (certainty_equivalent, ez_value_update,
                                   phi_disutility)
from ..economy.shocks import build_quadrature
from ..economy.steady import deterministic_steady
from ..economy.within import RuleParams, WithinBlock
from ..numerics import fit_eval, newton_batched
from ..numerics.kernel import cheb_basis_numpy
from .surfaces import build_surface, residual_audit

DAMP_FLOOR = 1.0 / 64.0


# ---------------------------------------------------------------------------
# batched Newton with cross-sweep Jacobian reuse
# ---------------------------------------------------------------------------

class SweepNewton:
    """Damped batched Newton keeping the Jacobian across calls.

    Policies move little between sweeps, so the factored Jacobian from an
    earlier sweep remains an excellent preconditioner; it is refreshed on a
    fixed age schedule or when a step fails to reduce the residual.
    """

    def __init__(self, refresh_age: int = 10, fd_step: float = 1e-7):
        self.J = None
        self.age = refresh_age + 1
        self.refresh_age = refresh_age
        self.fd_step = fd_step
        self.n_calls = 0

    def _jacobian(self, fn, X, F):
        M, n = X.shape
        J = np.empty((M, n, n))
        for j in range(n):
            step = self.fd_step * np.maximum(1.0, np.abs(X[:, j]))
            Xp = X.copy()
            Xp[:, j] += step
            J[:, :, j] = (fn(Xp) - F) / step[:, None]
            self.n_calls += 1
        self.age = 0
        return J

    def solve(self, fn, X0, tol: float = 1e-9, max_iter: int = 8):
        X = np.array(X0, dtype=float)
        F = fn(X)
        self.n_calls += 1
        norm = np.max(np.abs(F), axis=1)
        refreshed = False
        for _ in range(max_iter):
            if not (norm >= tol).any():
                break
            if self.J is None or self.age > self.refresh_age:
                self.J = self._jacobian(fn, X, F)
                refreshed = True
            try:
                dX = np.linalg.solve(self.J, -F[..., None])[..., 0]
            except np.linalg.LinAlgError:
                self.J = self.J + 1e-9 * np.eye(X.shape[1])
                dX = np.linalg.solve(self.J, -F[..., None])[..., 0]
            active = norm >= tol
            lam = np.where(active, 1.0, 0.0)
            best = norm.copy()
            improved_any = False
            for _ in range(7):
                X_try = X + lam[:, None] * dX
                F_try = fn(X_try)
                self.n_calls += 1
                n_try = np.max(np.abs(F_try), axis=1)
                n_try = np.where(np.isfinite(n_try), n_try, np.inf)
                better = active & (n_try < best)
                X = np.where(better[:, None], X_try, X)
                F = np.where(better[:, None], F_try, F)
                best = np.where(better, n_try, best)
                improved_any |= bool(better.any())
                lam = np.where(better, 0.0, lam * 0.5)
                if not (lam > DAMP_FLOOR / 2).any():
                    break
            norm = best
            self.age += 1
            if not improved_any:
                if refreshed:
                    break  # fresh Jacobian and still stuck: give up this sweep
                self.J = self._jacobian(fn, X, F)
                refreshed = True
        return X, norm


# ---------------------------------------------------------------------------
# value-recursion accelerator
# ---------------------------------------------------------------------------

def _tensor_basis_matrix(grid, unit_pts) -> np.ndarray:
    """Explicit tensor Chebyshev basis (rows ordered like flat coefficients)."""
    B = np.ones((unit_pts.shape[0], 1))
    for d in range(grid.dim):
        T = cheb_basis_numpy(np.clip(unit_pts[:, d], -1.0, 1.0), grid.n_nodes[d])
        B = (B[:, :, None] * T[:, None, :]).reshape(unit_pts.shape[0], -1)
    return B


def howard_value_steps(cal, grid, pts_next, wts, mu, growth, cphi, V_nodes,
                       n_steps: int) -> np.ndarray:
    """Iterate the value recursion with policies (hence transitions) fixed.

    ``pts_next``: (N*K, dim) transition points; ``V_nodes``: (N, n) current
    node values.  Uses a cached basis matrix when the memory footprint is
    moderate, otherwise falls back to fewer interpolant evaluations.
    """
    if grid.n_nodes is None or pts_next.shape[0] * np.prod(grid.n_nodes) > 4e8:
        n_steps = min(n_steps, 5)
        B = None
    else:
        B = _tensor_basis_matrix(grid, grid.to_unit(pts_next))
    N, n = V_nodes.shape
    K = pts_next.shape[0] // N
    V = V_nodes.copy()
    for _ in range(n_steps):
        itp = fit_eval(grid, np.log(V).T)
        if B is not None:
            logv = B @ itp._flat.T
        else:
            logv, _ = itp.eval(pts_next, extrapolate="clamp")
        v_hat = mu * np.exp(logv).reshape(N, K, n) * growth[:, :, None]
        # floor against underflow from not-yet-converged nodes in early
        # sweeps; inactive once the within-period solutions are accurate
        v_hat = np.maximum(v_hat, 1e-12)
        ce = np.empty((N, n))
        for j in range(n):
            ce[:, j] = certainty_equivalent(v_hat[:, :, j], wts, cal.gammas[j])
        V = np.maximum(ez_value_update(cphi, ce, cal.beta, cal.psi), 1e-12)
    return V


# ---------------------------------------------------------------------------
# main driver
# ---------------------------------------------------------------------------

def _rescue_rows(block, states, cont, U, norms, s_warm, ss, kwargs,
                 threshold: float = 1e-6):
    """Re-solve rows the shared-Jacobian sweep left unconverged.

    Uses the fully robust per-row Newton (fresh Jacobian every iteration)
    from both the current iterate and the stationary-point guess, keeping
    whichever lands lower.  Only ever touches the failing rows.
    """
    bad = norms > threshold
    if not bad.any():
        return U, norms
    idx = np.where(bad)[0]
    st = states[idx]
    sub_kwargs = dict(kwargs)
    if sub_kwargs.get("instrument") is not None:
        sub_kwargs["instrument"] = np.asarray(sub_kwargs["instrument"])[idx]
    sw = None if s_warm is None else s_warm[idx]

    def fnb(X):
        return block.residuals(X, st, cont, s_warm=sw, **sub_kwargs)

    best_X = U[idx].copy()
    best_norm = norms[idx].copy()
    starts = (U[idx], block.initial_guess(st, ss))
    for X0 in starts:
        X, _, _ = newton_batched(fnb, X0, tol=threshold, max_iter=25)
        n_row = np.max(np.abs(fnb(X)), axis=1)
        n_row = np.where(np.isfinite(n_row), n_row, np.inf)
        take = n_row < best_norm
        best_X[take] = X[take]
        best_norm[take] = n_row[take]
    U = U.copy()
    norms = norms.copy()
    U[idx] = best_X
    norms[idx] = best_norm
    return U, norms


def initial_continuation(cal, grid, block: WithinBlock):
    """Constant continuation at the shock-free stationary point."""
    ss = deterministic_steady(cal)
    N = grid.points().shape[0]
    lo = block.layout
    vals = lo.pack_cont(
        np.tile(ss.V, (N, 1)), np.tile(ss.c, (N, 1)),
        np.zeros(N), np.ones(N), np.ones(N), np.ones(N))
    return fit_eval(grid, vals, lo.cont_names()), ss


def solve_competitive_equilibrium(
    cal,
    rule: RuleParams | None,
    grid,
    *,
    quad=None,
    damp: float = 0.3,
    step_cap: float = 0.05,
    tol: float = 1e-6,
    max_sweeps: int = 3000,
    inner_tol: float = 1e-9,
    howard: int = 60,
    n_sfp: int = 2,
    instrument_policy=None,
    regime: str = "taylor",
    cont0=None,
    U0=None,
    audit_states: int = 200,
    verbose: bool = False,
    callback=None,
):
    """Time-iteration fixed point of the rule-based recursive equilibrium.

    ``instrument_policy``: optional callable states -> i overriding the rule
    (used by the discretion and commitment drivers); the ``rule`` argument is
    then ignored inside the period system but retained as metadata.
    """
    t0 = time.perf_counter()
    if rule is not None and rule.phi_pi <= 1.0 and instrument_policy is None:
        raise ValueError("rule regimes need phi_pi > 1 for determinacy")
    quad = quad if quad is not None else build_quadrature(cal)
    block = WithinBlock(cal, quad, n_sfp=n_sfp)
    states = grid.points()
    N = states.shape[0]
    cont, ss = initial_continuation(cal, grid, block)
    if cont0 is not None:
        cont = cont0
    U = block.initial_guess(states, ss) if U0 is None else np.array(U0)
    if U0 is None and rule is not None and rule.intercept is not None:
        U[:, -1] = rule.intercept
    lo = block.layout
    s_warm = None
    damp_cap = damp
    newton = SweepNewton()
    packed_old = cont.eval(states)[0].T
    change_hist = []
    bad_streak = 0
    good_streak = 0
    converged = False
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        kwargs = {}
        if instrument_policy is not None:
            kwargs["instrument"] = instrument_policy(states)
        else:
            kwargs["rule"] = rule

        def fn(X):
            return block.residuals(X, states, cont, s_warm=s_warm, **kwargs)

        settled = change_hist and change_hist[-1] < 1e-2
        U, norms = newton.solve(fn, U, tol=inner_tol,
                                max_iter=4 if settled else 8)
        if np.max(norms) > 1e-6:
            U, norms = _rescue_rows(block, states, cont, U, norms,
                                    s_warm, ss, kwargs)
        res, pv, nb, diag = block.residuals(
            U, states, cont, s_warm=s_warm, full_output=True, **kwargs)
        s_warm = nb["s"]

        V_new = diag["V"]
        if howard > 0:
            pts_next = np.empty((N * quad.n_nodes, lo.state_dim))
            pts_next[:, 0] = nb["kh"].ravel()
            pts_next[:, 1] = nb["w"].ravel()
            for col, j in enumerate(lo.share_states):
                pts_next[:, 2 + col] = nb["s"][:, :, j].ravel()
            pts_next[:, -2] = nb["p"].ravel()
            pts_next[:, -1] = nb["m"].ravel()
            cphi = pv["c"] * phi_disutility(
                cal.phi_labor[None, :] * pv["ell"][:, None],
                cal.theta_bar[None, :], cal.psi, cal.theta)
            V_new = howard_value_steps(cal, grid, pts_next, nb["wts"],
                                       nb["mu"], nb["growth"], cphi, V_new,
                                       howard)

        packed_new = lo.pack_cont(V_new, pv["c"], pv["pi"], pv["piW"],
                                  pv["q"], pv["ell"])
        change = float(np.max(np.abs(packed_new - packed_old)))
        # trust-region cap: a handful of badly-solved nodes in early sweeps
        # must not be allowed to swing the continuation by whole log units
        packed_upd = packed_old + np.clip(damp * (packed_new - packed_old),
                                          -step_cap, step_cap)
        cont = fit_eval(grid, packed_upd, lo.cont_names())
        packed_old = packed_upd
        change_hist.append(change)
        if callback is not None:
            callback(sweep, change, diag)
        if verbose and (sweep % 25 == 0 or change < tol):
            print(f"  sweep {sweep:4d}  change {change:.3e}  "
                  f"inner {np.max(norms):.2e}  oob {diag['out_of_hull_frac']:.3f}")
        if len(change_hist) > 1 and change > change_hist[-2] * (1 - 1e-12):
            bad_streak += 1
            good_streak = 0
            if bad_streak >= 15:
                damp = max(damp * 0.67, 0.02)
                bad_streak = 0
                warnings.warn(
                    f"oscillation detected at sweep {sweep}; dampening -> {damp:.3f}")
        else:
            bad_streak = 0
            good_streak += 1
            # sustained monotone progress: let the factor recover, but never
            # beyond its starting value (growing past it re-triggers cycles)
            if good_streak >= 10:
                damp = min(damp * 1.1, damp_cap)
                good_streak = 0
        if change < tol:
            converged = True
            break

    # final consistency pass: tight inner solve, fully iterated share block
    kwargs = {}
    if instrument_policy is not None:
        kwargs["instrument"] = instrument_policy(states)
    else:
        kwargs["rule"] = rule

    def fn_final(X):
        return block.residuals(X, states, cont, s_warm=s_warm, n_sfp=6, **kwargs)

    U, norms = SweepNewton().solve(fn_final, U, tol=1e-10, max_iter=12)
    res, pv, nb, diag = block.residuals(U, states, cont, s_warm=s_warm,
                                        n_sfp=6, full_output=True, **kwargs)

    meta = {
        "iterations": sweep,
        "converged": bool(converged),
        "final_change": change_hist[-1] if change_hist else float("nan"),
        "final_inner_residual": float(np.max(norms)),
        "dampening": damp,
        "tolerance": tol,
        "out_of_hull_frac": diag["out_of_hull_frac"],
        "negative_wealth_nodes": diag["negative_wealth"],
        "wall_time_s": time.perf_counter() - t0,
        "residual_calls": newton.n_calls,
    }
    if not converged:
        warnings.warn(
            f"time iteration stopped at sweep {sweep} with change "
            f"{meta['final_change']:.3e} > tol {tol:g}; returning best iterate")
    surface = build_surface(regime, cal, grid, block, states, U, pv, diag,
                            rule=rule, meta=meta)
    if audit_states:
        inst_fn = None
        if instrument_policy is not None:
            inst_fn = instrument_policy
        audit = residual_audit(surface, block, n_states=audit_states,
                               rule=rule, instrument_fn=inst_fn)
        surface.meta["audit"] = audit
    return surface


def calibrate_rule_intercept(cal, rule, grid, *, max_fits: int = 5,
                             fit_tol: float = 1e-4, reference_state=None,
                             verbose: bool = False, **solve_kwargs):
    """Pin down the rule intercept so reference-state inflation is zero.

    The rule composes the nominal rate as (1+icpt)(1+pi)^phi_pi; the Fisher
    update icpt <- (1+icpt)(1+pi_ref)^(phi_pi-1) - 1 converges in one step
    when the equilibrium real rate is locally flat, so a handful of
    warm-started re-solves suffice.  Returns (surface, fitted_rule).
    """
    ss = deterministic_steady(cal)
    if reference_state is None:
        # grid dims beyond (kh, w) and ahead of (p, m) hold wealth shares;
        # the reference point uses the calibration share targets
        nu = [g.nu for g in cal.groups]
        mids = [nu[j] for j in range(len(nu)) if j != 1][:grid.dim - 4]
        reference_state = np.array([ss.k, ss.w, *mids, cal.p_bar, 1.0])
    ref = np.atleast_2d(np.asarray(reference_state, dtype=float))
    icpt = rule.intercept if rule.intercept is not None else cal.taylor_intercept
    cont0 = U0 = None
    surf = None
    fitted = rule
    for fit in range(max_fits):
        fitted = replace(rule, intercept=icpt)
        surf = solve_competitive_equilibrium(cal, fitted, grid,
                                             cont0=cont0, U0=U0,
                                             **solve_kwargs)
        raw = surf.cont.eval(ref, extrapolate="clamp")[0].ravel()
        n = len(cal.groups)
        pi_ref = float(raw[2 * n])
        if verbose:
            print(f"  intercept fit {fit}: icpt {icpt:.6f} "
                  f"pi_ref {pi_ref:.3e}")
        if abs(pi_ref) < fit_tol:
            break
        icpt = (1.0 + icpt) * (1.0 + pi_ref) ** (fitted.phi_pi - 1.0) - 1.0
        cont0 = surf.cont
        U0 = surf.unknowns(grid.points())
    return surf, fitted


def inner_period_solve(state, cal, continuation, quad, rule=None,
                       instrument=None, tol: float = 1e-10, U0=None,
                       block=None):
    """Solve the within-period system at a single state to full tolerance."""
    if block is None:
        block = WithinBlock(cal, quad, n_sfp=4)
    states = np.atleast_2d(np.asarray(state, dtype=float))
    if U0 is None:
        ss = deterministic_steady(cal)
        U0 = block.initial_guess(states, ss)
    else:
        U0 = np.atleast_2d(np.asarray(U0, dtype=float))
    kwargs = {"rule": rule} if instrument is None else {
        "instrument": np.atleast_1d(instrument)}

    def fn(X):
        return block.residuals(X, states, continuation, **kwargs)

    newton = SweepNewton(refresh_age=0)
    U, norms = newton.solve(fn, U0, tol=tol, max_iter=60)
    if np.max(norms) > tol * 50:
        raise RuntimeError(
            f"within-period solve failed at state {states[0]}: "
            f"residual {np.max(norms):.2e}")
    res, pv, nb, diag = block.residuals(U, states, continuation,
                                        full_output=True, **kwargs)
    pv = dict(pv)
    pv["V"] = diag["V"]
    pv["residual"] = float(np.max(np.abs(res)))
    pv["risk_premium"] = diag["risk_premium"]
    pv["unknowns"] = U
    return pv
