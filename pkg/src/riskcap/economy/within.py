"""Within-period equilibrium system of the detrended economy.

Given an aggregate state, candidate within-period variables, and continuation
interpolants, this module evaluates every equilibrium condition in vectorized
form across a batch of states.  The unknown vector per state is

    [pi_W, pi, log c per group, log k per free-capital group, i]

and the residual vector stacks goods clearing, the wage Phillips curve, one
bond Euler equation per group, one portfolio condition per free-capital
group (complementarity form under a leverage cap), and the policy-rate
equation (rule, clamped rule under a ZLB, or a given instrument).

Bond positions are recovered from the period budget constraints, so bond
market clearing is implied by goods clearing (Walras) and is reported as an
audit quantity rather than imposed.  Wealth shares next period depend on
next-period prices, which in turn depend on the shares; the small fixed
point is iterated per quadrature node from a warm start maintained by the
solver between sweeps.

Continuation interpolants carry, per group, the detrended value and
consumption, plus aggregate price inflation, wage inflation, the capital
price, and employment; positive quantities are stored in logs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .preferences import certainty_equivalent, ez_value_update, phi_disutility
from .shocks import p_next


# ---------------------------------------------------------------------------
# layout helpers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Layout:
    """Index bookkeeping for states, unknowns, and continuation outputs."""

    n_groups: int
    free_capital: tuple[int, ...]     # groups whose capital is an unknown
    floor_values: tuple[float, ...]   # per-group capital floor (nan if free)
    share_states: tuple[int, ...]     # groups whose share is a state variable
    residual_share: int               # group whose share is the residual

    @classmethod
    def build(cls, cal) -> "Layout":
        n = cal.n_groups
        free, floors = [], []
        for j, g in enumerate(cal.groups):
            if g.mode == "capital-floor":
                floors.append(g.k_floor)
            else:
                free.append(j)
                floors.append(float("nan"))
        residual = 1 if n > 1 else 0
        shares = tuple(j for j in range(n) if j != residual)
        return cls(n, tuple(free), tuple(floors), shares, residual)

    # ---- states: [k_scaled, w_scaled, shares..., p, m] ------------------
    @property
    def state_dim(self) -> int:
        return 4 + len(self.share_states)

    def shares_from_states(self, states) -> np.ndarray:
        N = states.shape[0]
        s = np.empty((N, self.n_groups))
        if self.share_states:
            block = states[:, 2:2 + len(self.share_states)]
            for col, j in enumerate(self.share_states):
                s[:, j] = block[:, col]
            s[:, self.residual_share] = 1.0 - block.sum(axis=1)
        else:
            s[:, 0] = 1.0
        return s

    def states_from_shares(self, kh, w, shares, p, m) -> np.ndarray:
        cols = [kh, w] + [shares[..., j] for j in self.share_states] + [p, m]
        return np.column_stack([np.asarray(c, dtype=float) for c in cols])

    # ---- unknowns: [piW, pi, log c (n), log k (nf), i] -------------------
    @property
    def n_unknowns(self) -> int:
        return 3 + self.n_groups + len(self.free_capital)

    def unpack(self, U):
        n, nf = self.n_groups, len(self.free_capital)
        piW = U[:, 0]
        pi = U[:, 1]
        c = np.exp(U[:, 2:2 + n])
        k = np.empty((U.shape[0], n))
        for j, fv in enumerate(self.floor_values):
            if np.isfinite(fv):
                k[:, j] = fv
        for col, j in enumerate(self.free_capital):
            k[:, j] = np.exp(U[:, 2 + n + col])
        i_rate = U[:, 2 + n + nf]
        return piW, pi, c, k, i_rate

    def pack(self, piW, pi, c, k, i_rate) -> np.ndarray:
        cols = [piW, pi]
        cols += [np.log(c[:, j]) for j in range(self.n_groups)]
        cols += [np.log(k[:, j]) for j in self.free_capital]
        cols += [i_rate]
        return np.column_stack([np.asarray(x, dtype=float) for x in cols])

    # ---- continuation outputs -------------------------------------------
    @property
    def n_cont(self) -> int:
        return 2 * self.n_groups + 4

    def cont_names(self) -> list[str]:
        n = self.n_groups
        return ([f"log_V_{j}" for j in range(n)] + [f"log_c_{j}" for j in range(n)]
                + ["pi", "piW", "log_q", "log_l"])

    def pack_cont(self, V, c, pi, piW, q, ell) -> np.ndarray:
        """Stack node values (each (N,) or (N,n)) into (n_cont, N)."""
        rows = [np.log(V[:, j]) for j in range(self.n_groups)]
        rows += [np.log(c[:, j]) for j in range(self.n_groups)]
        rows += [pi, piW, np.log(q), np.log(ell)]
        return np.vstack([np.asarray(r, dtype=float) for r in rows])

    def unpack_cont(self, raw):
        """Inverse of pack_cont for raw (..., n_cont) interpolant output.

        Log outputs are clipped before exponentiation so that linear
        extrapolation at transition points far outside the hull (reachable
        only from rejected line-search trial steps) cannot underflow to an
        exact zero or overflow to inf.
        """
        n = self.n_groups
        V = np.exp(np.clip(raw[..., :n], -60.0, 60.0))
        c = np.exp(np.clip(raw[..., n:2 * n], -60.0, 60.0))
        pi = raw[..., 2 * n]
        piW = raw[..., 2 * n + 1]
        q = np.exp(np.clip(raw[..., 2 * n + 2], -60.0, 60.0))
        ell = np.exp(np.clip(raw[..., 2 * n + 3], -60.0, 60.0))
        return V, c, pi, piW, q, ell


@dataclass(frozen=True)
class RuleParams:
    """Interest-rate rule: Taylor block plus risk-capacity augmentation."""

    phi_pi: float = 1.5
    phi_y: float = 0.0
    phi_s: float = 0.0
    phi_rp: float = 0.0
    s_ref: float = 0.0       # reference share of the first group
    rp_ref: float = 0.0      # reference expected excess return (quarterly)
    zlb: bool = False
    intercept: float | None = None  # quarterly; calibration default if None

    def as_tuple(self):
        return (self.phi_pi, self.phi_y, self.phi_s, self.phi_rp)


# ---------------------------------------------------------------------------
# core evaluation
# ---------------------------------------------------------------------------

class WithinBlock:
    """Vectorized evaluator for the within-period system on a state batch."""

    def __init__(self, cal, quad, n_sfp: int = 2):
        self.cal = cal
        self.quad = quad
        self.layout = Layout.build(cal)
        self.n_sfp = n_sfp if cal.n_groups > 1 else 0

    # ---- period aggregates given unknowns --------------------------------
    def period_vars(self, U, states, chi_W=None):
        cal, lo = self.cal, self.layout
        chi_W = cal.chi_W if chi_W is None else chi_W
        piW, pi, c, k_pc, i_rate = lo.unpack(U)
        kh = states[:, 0]
        w_lag = states[:, 1]
        shares = lo.shares_from_states(states)

        w = w_lag * piW / (1.0 + pi)
        ell = ((1.0 - cal.alpha) * kh**cal.alpha / w) ** (1.0 / cal.alpha)
        y = ell ** (1.0 - cal.alpha) * kh**cal.alpha
        k_agg = k_pc @ cal.lam
        q = (k_agg / kh) ** cal.chi_x
        x_inv = k_agg - (1.0 - cal.delta) * kh
        dividend = cal.alpha * y / kh
        fw = (dividend + (1.0 - cal.delta) * q) * kh
        ac = 0.5 * chi_W * (piW - 1.0) ** 2 * w * ell
        tr = cal.tau * (1.0 - cal.alpha) * y
        income = ((1.0 - cal.tau) * cal.phi_labor[None, :] * (w * ell)[:, None]
                  - ac[:, None] + shares * fw[:, None] / cal.lam[None, :]
                  + tr[:, None])
        b_pc = income - c - q[:, None] * k_pc
        return {
            "piW": piW, "pi": pi, "c": c, "k_pc": k_pc, "i": i_rate,
            "kh": kh, "w": w, "ell": ell, "y": y, "k_agg": k_agg, "q": q,
            "x": x_inv, "dividend": dividend, "fw": fw, "ac": ac, "tr": tr,
            "b_pc": b_pc, "shares": shares,
        }

    # ---- next-period block ------------------------------------------------
    def next_block(self, pv, states, cont, s_warm=None, n_sfp=None):
        """Transition, share fixed point, and continuation quantities.

        Returns a dict of (N, K[, n]) arrays; K = quadrature nodes.
        """
        cal, lo, quad = self.cal, self.layout, self.quad
        n_sfp = self.n_sfp if n_sfp is None else n_sfp
        N = states.shape[0]
        K = quad.n_nodes
        e_z = quad.eps_z[None, :]
        phi_n = quad.phi[None, :]
        growth = np.exp(e_z + phi_n)

        kh_n = pv["k_agg"][:, None] / np.exp(e_z)
        w_n = pv["w"][:, None] / np.exp(e_z)
        p_now = states[:, lo.state_dim - 2]
        p_n = p_next(cal, p_now[:, None], quad.eps_p[None, :])
        m_n = np.ones((N, K))
        wts = quad.weights(p_now)

        if s_warm is None:
            s_next = np.broadcast_to(pv["shares"][:, None, :], (N, K, lo.n_groups)).copy()
        else:
            s_next = s_warm.copy()

        out_of_hull = np.zeros(N * K, dtype=bool)
        one_pi = None
        for _ in range(n_sfp + 1):
            pts = np.empty((N * K, lo.state_dim))
            pts[:, 0] = kh_n.ravel()
            pts[:, 1] = w_n.ravel()
            for col, j in enumerate(lo.share_states):
                pts[:, 2 + col] = s_next[:, :, j].ravel()
            pts[:, -2] = p_n.ravel()
            pts[:, -1] = m_n.ravel()
            raw, oob = cont.eval(pts, extrapolate="clamp")
            out_of_hull |= oob
            V_n, c_n, pi_n, piW_n, q_n, ell_n = lo.unpack_cont(
                raw.reshape(N, K, lo.n_cont))
            y_n = ell_n ** (1.0 - cal.alpha) * kh_n**cal.alpha
            div_n = cal.alpha * y_n / kh_n
            one_pi = 1.0 + pi_n
            # payoffs in next-period trend units
            cap_unit = (div_n + (1.0 - cal.delta) * q_n) * np.exp(phi_n)
            pay_b = ((1.0 + pv["i"][:, None, None]) * pv["b_pc"][:, None, :]
                     / (one_pi * growth)[:, :, None])
            pay_k = cap_unit[:, :, None] * pv["k_pc"][:, None, :]
            payoff = pay_b + pay_k
            cap_total = cap_unit * pv["k_agg"][:, None]
            s_new = (cal.lam[None, None, :] * (1.0 - cal.xi) * payoff
                     / cap_total[:, :, None] + cal.xi * cal.s_bar[None, None, :])
            if lo.n_groups == 1:
                s_next = np.ones_like(s_new)
                break
            s_next = s_new

        avg_wealth = s_next * cap_total[:, :, None] / cal.lam[None, None, :]
        negative_wealth = int(np.count_nonzero(payoff <= 0.0))
        mu = payoff / np.maximum(avg_wealth, 1e-12)
        mu = np.clip(mu, 1e-8, None)

        return {
            "kh": kh_n, "w": w_n, "p": p_n, "m": m_n, "growth": growth,
            "phi": phi_n, "wts": wts, "s": s_next, "mu": mu,
            "V": V_n, "c": c_n, "pi": pi_n, "piW": piW_n, "q": q_n,
            "ell": ell_n, "y": y_n, "dividend": div_n,
            "cap_unit": cap_unit, "payoff": payoff, "cap_total": cap_total,
            "out_of_hull": out_of_hull.reshape(N, K),
            "negative_wealth": negative_wealth,
        }

    # ---- pricing kernels ---------------------------------------------------
    def kernels(self, pv, nb):
        """Per-group SDF kernel arrays (N, K, n) and certainty equivalents."""
        cal = self.cal
        phi_l = phi_disutility(cal.phi_labor[None, :] * pv["ell"][:, None],
                               cal.theta_bar[None, :], cal.psi, cal.theta)
        cphi = pv["c"] * phi_l
        phi_l_n = phi_disutility(
            cal.phi_labor[None, None, :] * nb["ell"][:, :, None],
            cal.theta_bar[None, None, :], cal.psi, cal.theta)
        cphi_n = nb["c"] * phi_l_n
        v_hat = nb["mu"] * nb["V"] * nb["growth"][:, :, None]
        ce = np.empty((pv["c"].shape[0], cal.n_groups))
        for j in range(cal.n_groups):
            ce[:, j] = certainty_equivalent(v_hat[:, :, j], nb["wts"],
                                            cal.gammas[j], axis=-1)
        ratio = cphi_n * nb["growth"][:, :, None] / cphi[:, None, :]
        m = ratio ** (-1.0 / cal.psi)
        ex = 1.0 / cal.psi - cal.gammas
        m = m * (v_hat / ce[:, None, :]) ** ex[None, None, :]
        return {"m": m, "ce": ce, "cphi": cphi, "v_hat": v_hat}

    # ---- policy rate --------------------------------------------------------
    def rule_rate(self, rule, pv, nb, states, y_flex=None):
        cal = self.cal
        icpt = (cal.taylor_intercept if rule.intercept is None
                else rule.intercept)
        log_rate = (np.log1p(icpt)
                    + rule.phi_pi * np.log1p(pv["pi"])
                    + np.log(states[:, -1]))
        if rule.phi_y != 0.0:
            if y_flex is None:
                raise ValueError("output-gap response needs the flexible-wage "
                                 "output level (y_flex)")
            log_rate = log_rate + rule.phi_y * np.log(pv["y"] / y_flex)
        if rule.phi_s != 0.0:
            log_rate = log_rate + rule.phi_s * (pv["shares"][:, 0] - rule.s_ref)
        if rule.phi_rp != 0.0:
            gross_k = nb["cap_unit"] * nb["growth"] / pv["q"][:, None]
            e_rk = np.sum(nb["wts"] * gross_k, axis=1)
            e_rb = (1.0 + pv["i"]) * np.sum(nb["wts"] / (1.0 + nb["pi"]), axis=1)
            log_rate = log_rate + rule.phi_rp * (e_rk - e_rb - rule.rp_ref)
        rate = np.expm1(log_rate)
        if rule.zlb:
            return np.maximum(rate, 0.0), rate < 0.0
        return rate, np.zeros_like(rate, dtype=bool)

    # ---- residual assembly ---------------------------------------------------
    def residuals(self, U, states, cont, rule=None, instrument=None,
                  s_warm=None, y_flex=None, chi_W=None, n_sfp=None,
                  full_output=False):
        cal, lo = self.cal, self.layout
        chi_W_eff = cal.chi_W if chi_W is None else chi_W
        pv = self.period_vars(U, states, chi_W=chi_W_eff)
        nb = self.next_block(pv, states, cont, s_warm=s_warm, n_sfp=n_sfp)
        kr = self.kernels(pv, nb)
        wts = nb["wts"]
        N = states.shape[0]

        res = np.empty((N, lo.n_unknowns))
        # goods market clearing (normalized by output)
        res[:, 0] = (pv["c"] @ cal.lam + pv["q"] * pv["x"] + pv["ac"]
                     - pv["y"]) / pv["y"]

        # wage Phillips curve (normalized by the elasticity scale)
        lam_c = cal.lam[None, :] / pv["c"]
        lam_c_n = cal.lam[None, None, :] / nb["c"]
        wedge = (np.sum(lam_c * cal.theta_bar[None, :]
                        * (cal.phi_labor[None, :] * pv["ell"][:, None])
                        ** (1.0 / cal.theta) * pv["ell"][:, None], axis=1)
                 / lam_c.sum(axis=1))
        fwd = cal.beta * chi_W_eff * np.sum(
            wts * (lam_c_n.sum(axis=2) / lam_c.sum(axis=1)[:, None])
            * nb["piW"] * (nb["piW"] - 1.0) * nb["ell"] / pv["ell"][:, None],
            axis=1)
        res[:, 1] = (chi_W_eff * pv["piW"] * (pv["piW"] - 1.0)
                     - (1.0 - cal.epsilon_elast)
                     - cal.epsilon_elast * wedge - fwd) / cal.epsilon_elast

        # bond Euler equations
        disc = cal.beta * (1.0 - cal.xi) * (1.0 + pv["i"])
        e_bond = np.sum(wts[:, :, None] * kr["m"]
                        / (1.0 + nb["pi"])[:, :, None], axis=1)
        res[:, 2:2 + lo.n_groups] = 1.0 - disc[:, None] * e_bond

        # portfolio conditions for free-capital groups
        gross_k = (nb["cap_unit"] * nb["growth"] / pv["q"][:, None])[:, :, None]
        gross_b = ((1.0 + pv["i"])[:, None] / (1.0 + nb["pi"]))[:, :, None]
        e_m = np.sum(wts[:, :, None] * kr["m"], axis=1)
        port = np.sum(wts[:, :, None] * kr["m"] * (gross_k - gross_b), axis=1) / e_m
        for col, j in enumerate(lo.free_capital):
            g = cal.groups[j]
            if g.mode == "leverage-constrained":
                n_j = pv["b_pc"][:, j] + pv["q"] * pv["k_pc"][:, j]
                slack = pv["q"] * (g.leverage_cap * n_j - pv["k_pc"][:, j])
                res[:, 2 + lo.n_groups + col] = np.minimum(slack, port[:, j])
            else:
                res[:, 2 + lo.n_groups + col] = port[:, j]

        # policy-rate equation
        if instrument is not None:
            target = np.asarray(instrument, dtype=float)
            binding = np.zeros(N, dtype=bool)
        else:
            target, binding = self.rule_rate(rule or RuleParams(), pv, nb,
                                             states, y_flex=y_flex)
        res[:, -1] = (1.0 + pv["i"]) / (1.0 + target) - 1.0

        if not full_output:
            return res
        diag = self.diagnostics(pv, nb, kr, res, binding)
        return res, pv, nb, diag

    # ---- diagnostics and value update ------------------------------------
    def diagnostics(self, pv, nb, kr, res, zlb_binding):
        cal = self.cal
        wts = nb["wts"]
        # value recursion step (certainty equivalent already survivor/growth
        # adjusted inside the kernel block)
        V_now = ez_value_update(kr["cphi"], kr["ce"], cal.beta, cal.psi)
        bond_clearing = pv["b_pc"] @ cal.lam
        # capital-price pricing identity under the wealth-weighted kernel
        mbar = np.sum(pv["shares"][:, None, :] * kr["m"], axis=2)
        tobin = (1.0 - cal.beta * (1.0 - cal.xi)
                 * np.sum(wts * mbar * nb["cap_unit"] * nb["growth"], axis=1)
                 / pv["q"])
        e_rk = np.sum(wts * nb["cap_unit"] * nb["growth"], axis=1) / pv["q"] - 1.0
        e_rb = (1.0 + pv["i"]) * np.sum(wts / (1.0 + nb["pi"]), axis=1) - 1.0
        return {
            "V": V_now,
            "bond_clearing": bond_clearing,
            "tobin": tobin,
            "risk_premium": e_rk - e_rb,
            "expected_rk": e_rk,
            "expected_rb": e_rb,
            "out_of_hull_frac": float(np.mean(nb["out_of_hull"])),
            "negative_wealth": nb["negative_wealth"],
            "zlb_binding": zlb_binding,
            "sup_residual": float(np.max(np.abs(res))),
        }

    # ---- initial guess ------------------------------------------------------
    def initial_guess(self, states, ss) -> np.ndarray:
        lo = self.layout
        N = states.shape[0]
        piW = np.ones(N)
        pi = np.zeros(N)
        c = np.tile(ss.c, (N, 1))
        k = np.tile(ss.k_i, (N, 1))
        # scale free capital with the state's capital stock
        scale = states[:, 0] / ss.k
        for j in lo.free_capital:
            k[:, j] = ss.k_i[j] * scale
        i_rate = np.full(N, self.cal.taylor_intercept)
        return lo.pack(piW, pi, c, k, i_rate)
