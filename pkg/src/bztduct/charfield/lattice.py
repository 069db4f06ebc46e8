"""Characteristic-lattice solvers: Goursat and wall-reflection patches.

The lattice is indexed by the Riemann invariants: row i is a
plus-characteristic curve carrying s = s_i, column j a minus
characteristic carrying r = r_j, so the state at node (i, j) is known a
priori from the invariant pair and only the node positions need to be
computed.  Positions follow from intersecting the two characteristic
segments into the node, with trapezoidal (average-slope) coefficients:
a second-order marching scheme, vectorized over anti-diagonals.

Wall reflections are half-lattices closed by the slip condition: wall
nodes sit where r + s = 2*theta.  A direction mismatch at the wall foot
inserts a centered wave there (all its nodes share the foot position),
and an opening beyond the reachable turning emits a vacuum ray instead.
"""

import numpy as np
from scipy.interpolate import PchipInterpolator

from ..kinematics import VacuumReached, state_from_rs

__all__ = ["CharTrace", "CharLattice", "goursat_solve",
           "wall_reflection_solve", "LatticeError", "cross_characteristic"]


class LatticeError(ValueError):
    pass


class CharTrace:
    """A characteristic curve with states, parametrized by its varying
    invariant.

    family=+1: a plus-characteristic curve (s constant, r varies);
    family=-1: a minus-characteristic curve (r constant, s varies).
    """

    def __init__(self, family, x, y, varying, const_invariant, ctx):
        self.family = family
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.varying = np.asarray(varying, dtype=float)
        self.const_invariant = float(const_invariant)
        self.ctx = ctx
        order = np.argsort(self.varying)
        self._xi = PchipInterpolator(self.varying[order], self.x[order])
        self._yi = PchipInterpolator(self.varying[order], self.y[order])

    @property
    def r_range(self):
        if self.family == +1:
            return self.varying.min(), self.varying.max()
        return self.const_invariant, self.const_invariant

    @property
    def s_range(self):
        if self.family == -1:
            return self.varying.min(), self.varying.max()
        return self.const_invariant, self.const_invariant

    def point_at(self, value):
        return float(self._xi(value)), float(self._yi(value))

    def rs_at(self, value):
        if self.family == +1:
            return float(value), self.const_invariant
        return self.const_invariant, float(value)

    def state_at(self, value):
        return state_from_rs(self.ctx, *self.rs_at(value))

    def endpoint_states(self):
        v0, v1 = self.varying[0], self.varying[-1]
        return self.state_at(v0), self.state_at(v1)

    def mirrored(self):
        """Reflection across the x-axis: families swap, invariants negate."""
        return CharTrace(-self.family, self.x, -self.y, -self.varying,
                         -self.const_invariant, self.ctx)

    def monotonicity_ok(self):
        dx = np.diff(self.x[np.argsort(self.varying)])
        return np.all(dx > 0) or np.all(dx < 0)


def cross_characteristic(ctx, fan, center, family, chi0=1.0, n=120):
    """Characteristic of the opposite family crossing a centered fan.

    For a plus-family fan about `center`, the minus-characteristic
    through the fan point at radius `chi0` on the starting ray satisfies
    d(chi)/d(xi) = -cot(2A) chi; the returned trace carries the fan's
    states (r = const across a plus fan).  `family` is the family of the
    returned cross-characteristic (-1 across a plus fan).
    """
    from scipy.integrate import solve_ivp

    fan_family = fan.family
    assert family == -fan_family
    eos = ctx.eos

    def rhs(tau, chi):
        st = fan.state_at_tau(tau)
        dd = eos.ddp(tau)
        dang_dtau = -fan_family * tau * tau * dd / (
            2.0 * st.q * st.c * np.cos(st.A))
        return [-1.0 / np.tan(2.0 * st.A) * chi[0] * dang_dtau]

    x0, y0 = center
    sol = solve_ivp(rhs, (fan.tau_start, fan.tau_end), [float(chi0)],
                    method="DOP853", rtol=1e-11, atol=1e-13,
                    dense_output=True)
    if not sol.success:
        raise LatticeError(f"cross-characteristic integration failed: "
                           f"{sol.message}")
    taus = np.geomspace(fan.tau_start, fan.tau_end,
                        max(n, 40))
    taus[0], taus[-1] = fan.tau_start, fan.tau_end
    chis = sol.sol(taus)[0]
    angs = np.array([fan.angle_at_tau(t) for t in taus])
    xs = x0 + chis * np.cos(angs)
    ys = y0 + chis * np.sin(angs)
    sts = [fan.state_at_tau(t) for t in taus]
    if fan_family == +1:
        varying = np.array([st.s for st in sts])
        const = sts[0].r
    else:
        varying = np.array([st.r for st in sts])
        const = sts[0].s
    return CharTrace(family, xs, ys, varying, const, ctx), sol


class CharLattice:
    """Structured characteristic lattice with invariant-indexed nodes."""

    def __init__(self, ctx, r_vals, s_vals, X, Y, mask=None, provenance=""):
        self.ctx = ctx
        self.r_vals = np.asarray(r_vals, dtype=float)  # columns
        self.s_vals = np.asarray(s_vals, dtype=float)  # rows
        self.X = X
        self.Y = Y
        self.mask = mask if mask is not None else np.isfinite(X)
        self.provenance = provenance
        R, S = np.meshgrid(self.r_vals, self.s_vals, indexing="xy")
        # rows i: s = s_vals[i]; columns j: r = r_vals[j]
        self.R, self.S = R, S
        W = 0.5 * (R - S)
        band = (W > -1e-12) & (W < ctx.w_vac)
        self.mask &= band
        SIG = 0.5 * (R + S)
        W_safe = np.clip(W, 0.0, ctx.w_vac * (1 - 1e-15))
        U, V, TAU = ctx.state_arrays_from_rs(SIG + W_safe, SIG - W_safe)
        self.U, self.V, self.TAU = U, V, TAU
        A = ctx.mach_angle(TAU, fast=True)
        self.ALPHA, self.BETA = SIG + A, SIG - A
        self.SIGMA = SIG

    @property
    def shape(self):
        return self.X.shape

    def node_state(self, i, j):
        return state_from_rs(self.ctx, self.r_vals[j], self.s_vals[i])

    def row_trace(self, i):
        """Plus-characteristic trace along row i (s = s_vals[i])."""
        m = self.mask[i]
        return CharTrace(+1, self.X[i, m], self.Y[i, m], self.r_vals[m],
                         self.s_vals[i], self.ctx)

    def col_trace(self, j):
        """Minus-characteristic trace along column j (r = r_vals[j])."""
        m = self.mask[:, j]
        return CharTrace(-1, self.X[m, j], self.Y[m, j], self.s_vals[m],
                         self.r_vals[j], self.ctx)

    # -- diagnostics ---------------------------------------------------------

    def invariant_drift(self, sample=7):
        """Recompute (r, s) from the stored velocities at sampled nodes
        through the scalar kinematics path and report the worst drifts."""
        from ..kinematics import state_from_uv
        ni, nj = self.shape
        worst_r = worst_s = 0.0
        for i in range(0, ni, max(1, ni // sample)):
            for j in range(0, nj, max(1, nj // sample)):
                if not self.mask[i, j]:
                    continue
                st = state_from_uv(self.ctx, self.U[i, j], self.V[i, j])
                worst_r = max(worst_r, abs(st.r - self.r_vals[j]))
                worst_s = max(worst_s, abs(st.s - self.s_vals[i]))
        return worst_r, worst_s

    def bernoulli_residual(self):
        h = self.ctx.eos.h(self.TAU[self.mask])
        q2 = self.U[self.mask] ** 2 + self.V[self.mask] ** 2
        return float(np.max(np.abs(0.5 * q2 + h - self.ctx.B)))

    def slope_consistency(self):
        """Worst gap between lattice segment slopes and averaged
        characteristic tangents (scheme-order check)."""
        worst = 0.0
        ni, nj = self.shape
        for i in range(ni):
            for j in range(1, nj):
                if not (self.mask[i, j] and self.mask[i, j - 1]):
                    continue
                dx = self.X[i, j] - self.X[i, j - 1]
                dy = self.Y[i, j] - self.Y[i, j - 1]
                t = 0.5 * (np.tan(self.ALPHA[i, j])
                           + np.tan(self.ALPHA[i, j - 1]))
                worst = max(worst, abs(dy - t * dx) / max(1e-12, abs(dx)))
        for i in range(1, ni):
            for j in range(nj):
                if not (self.mask[i, j] and self.mask[i - 1, j]):
                    continue
                dx = self.X[i, j] - self.X[i - 1, j]
                dy = self.Y[i, j] - self.Y[i - 1, j]
                t = 0.5 * (np.tan(self.BETA[i, j])
                           + np.tan(self.BETA[i - 1, j]))
                worst = max(worst, abs(dy - t * dx) / max(1e-12, abs(dx)))
        return worst

    def node_cloud(self, fields=("u", "v")):
        pts = np.column_stack([self.X[self.mask], self.Y[self.mask]])
        out = {}
        for f in fields:
            if f == "u":
                out["u"] = self.U[self.mask]
            elif f == "v":
                out["v"] = self.V[self.mask]
            elif f == "rho":
                out["rho"] = 1.0 / self.TAU[self.mask]
            elif f == "tau":
                out["tau"] = self.TAU[self.mask]
            elif f == "sigma":
                out["sigma"] = self.SIGMA[self.mask]
            elif f == "r":
                out["r"] = self.R[self.mask]
            elif f == "s":
                out["s"] = self.S[self.mask]
        return pts, out

    def char_gradients(self):
        """(d+rho, d-rho, d+sigma, d-sigma) at nodes by invariant-space
        differences: along a row (plus direction) only r varies, so
        d+f = (df/dr) / (dx/dr) etc."""
        ni, nj = self.shape
        RHO = 1.0 / self.TAU

        def ddir(F, axis):
            # derivative of F wrt arclength along rows (axis=1) / cols (0)
            dF = np.gradient(F, axis=axis)
            dX = np.gradient(self.X, axis=axis)
            dY = np.gradient(self.Y, axis=axis)
            ds = np.hypot(dX, dY)
            sgn = np.sign(dX)  # characteristics advance in +x
            return dF / ds * sgn

        return {
            "rho_plus": ddir(RHO, 1), "rho_minus": ddir(RHO, 0),
            "sigma_plus": ddir(self.SIGMA, 1),
            "sigma_minus": ddir(self.SIGMA, 0),
        }

    def cartesian_gradients(self):
        g = self.char_gradients()
        s2A = np.sin(self.ALPHA - self.BETA)
        rho_x = (-np.sin(self.BETA) * g["rho_plus"]
                 + np.sin(self.ALPHA) * g["rho_minus"]) / s2A
        rho_y = (np.cos(self.BETA) * g["rho_plus"]
                 - np.cos(self.ALPHA) * g["rho_minus"]) / s2A
        sig_x = (-np.sin(self.BETA) * g["sigma_plus"]
                 + np.sin(self.ALPHA) * g["sigma_minus"]) / s2A
        sig_y = (np.cos(self.BETA) * g["sigma_plus"]
                 - np.cos(self.ALPHA) * g["sigma_minus"]) / s2A
        return {"rho_x": rho_x[self.mask], "rho_y": rho_y[self.mask],
                "sigma_x": sig_x[self.mask], "sigma_y": sig_y[self.mask]}


def _march(ctx, r_vals, s_vals, X, Y, active, wall=None):
    """Fill lattice positions along anti-diagonals.

    `active[i, j]` marks nodes to compute; X, Y carry boundary data on
    row 0 and column 0 (or preset nodes).  `wall` = (theta, x0, y0)
    clips columns at the slip line: nodes that would cross it are placed
    on the wall by intersecting the incoming minus-characteristic with
    the wall line (their invariants already satisfy r + s = 2 theta).
    """
    ni, nj = len(s_vals), len(r_vals)
    R, S = np.meshgrid(r_vals, s_vals, indexing="xy")
    TA = np.tan(np.asarray(_angles(ctx, R, S)[0]))
    TB = np.tan(np.asarray(_angles(ctx, R, S)[1]))
    done = np.isfinite(X)
    for d in range(2, ni + nj - 1):
        ii = np.arange(max(1, d - nj + 1), min(ni - 1, d - 1) + 1)
        jj = d - ii
        ok = (jj >= 1) & (jj < nj)
        ii, jj = ii[ok], jj[ok]
        if len(ii) == 0:
            continue
        sel = active[ii, jj] & done[ii, jj - 1] & done[ii - 1, jj] \
            & ~done[ii, jj]
        ii, jj = ii[sel], jj[sel]
        if len(ii) == 0:
            continue
        xA, yA = X[ii, jj - 1], Y[ii, jj - 1]   # plus-parent (same row)
        xB, yB = X[ii - 1, jj], Y[ii - 1, jj]   # minus-parent (same column)
        ta = 0.5 * (TA[ii, jj - 1] + TA[ii, jj])
        tb = 0.5 * (TB[ii - 1, jj] + TB[ii, jj])
        denom = ta - tb
        if np.any(denom <= 1e-14):
            k = np.argmin(denom)
            raise LatticeError(
                f"characteristic fold-over at cell (i={ii[k]}, j={jj[k]}): "
                "plus and minus slopes coincide")
        x = (yB - yA + ta * xA - tb * xB) / denom
        y = yA + ta * (x - xA)
        X[ii, jj], Y[ii, jj] = x, y
        done[ii, jj] = True
    return X, Y


def _angles(ctx, R, S):
    return ctx.char_angles(R, S, fast=True)


def goursat_solve(ctx, plus_trace, minus_trace, n_plus=40, n_minus=40,
                  compat_tol=1e-7):
    """March the lattice between two characteristic boundary curves.

    plus_trace carries data on a plus-characteristic (s constant, r in
    [r_P, r_E]); minus_trace on a minus-characteristic (r constant, s in
    [s_F, s_P]).  Both must leave the shared corner with equal states.
    The patch closes at the opposite corner provided
    r_E - s_F < 2 R_cal; otherwise VacuumReached is raised.
    """
    if plus_trace.family != +1 or minus_trace.family != -1:
        raise LatticeError("boundary traces must be (plus, minus) curves")
    sP_plus = plus_trace.const_invariant
    rP_minus = minus_trace.const_invariant
    r_lo, r_hi = plus_trace.r_range
    s_lo, s_hi = minus_trace.s_range
    if abs(s_hi - sP_plus) > compat_tol or abs(r_lo - rP_minus) > compat_tol:
        raise LatticeError(
            "boundary data incompatible at the shared corner: "
            f"s({s_hi:.8g}) vs {sP_plus:.8g}, r({r_lo:.8g}) vs {rP_minus:.8g}")
    xP1, yP1 = plus_trace.point_at(r_lo)
    xP2, yP2 = minus_trace.point_at(s_hi)
    if np.hypot(xP1 - xP2, yP1 - yP2) > compat_tol:
        raise LatticeError("boundary curves do not meet at the corner")
    if r_hi - s_lo >= 2.0 * ctx.w_vac:
        raise VacuumReached(
            f"opposite corner at or beyond the vacuum bound: r_E - s_F = "
            f"{r_hi - s_lo:.6g} vs 2 R_cal = {2 * ctx.R_cal:.6g} "
            f"(resolvable band 2 w_vac = {2 * ctx.w_vac:.6g})")

    r_vals = np.linspace(r_lo, r_hi, n_plus + 1)
    s_vals = np.linspace(s_hi, s_lo, n_minus + 1)
    ni, nj = len(s_vals), len(r_vals)
    X = np.full((ni, nj), np.nan)
    Y = np.full((ni, nj), np.nan)
    for j, r in enumerate(r_vals):
        X[0, j], Y[0, j] = plus_trace.point_at(r)
    for i, s in enumerate(s_vals):
        X[i, 0], Y[i, 0] = minus_trace.point_at(s)
    active = np.ones((ni, nj), dtype=bool)
    X, Y = _march(ctx, r_vals, s_vals, X, Y, active)
    return CharLattice(ctx, r_vals, s_vals, X, Y, provenance="goursat")


def wall_reflection_solve(ctx, incoming, theta, wall_anchor, side="lower",
                          n=40, n_fan=None):
    """Reflection of an incoming characteristic boundary off a straight
    wall through `wall_anchor` with inclination `theta`.

    For a lower wall the incoming trace is a plus-characteristic whose
    foot lies on the wall.  When the foot state's direction exceeds the
    wall angle, a centered wave is inserted at the foot; if even full
    expansion cannot align the flow (r_P >= R_cal + theta) the patch is
    closed by a vacuum ray at angle r_P - R_cal instead and the result
    is flagged.  Upper walls are handled by mirror symmetry.
    """
    if side == "upper":
        res = wall_reflection_solve(ctx, incoming.mirrored(), -theta,
                                    (wall_anchor[0], -wall_anchor[1]),
                                    side="lower", n=n, n_fan=n_fan)
        res.mirror_in_place()
        return res
    if incoming.family != +1:
        raise LatticeError("lower-wall reflection expects a plus-family "
                           "incoming trace")
    s_in = incoming.const_invariant
    r_lo, r_hi = incoming.r_range
    foot_sigma = 0.5 * (r_lo + s_in)
    gap = foot_sigma - theta
    if gap < -1e-9:
        raise LatticeError(
            f"foot direction {foot_sigma:.8g} below the wall angle "
            f"{theta:.8g}: flow runs into the wall")

    vacuum = r_lo >= ctx.R_cal + theta - 1e-12
    # rows: the incoming s plus the foot-fan band down to 2 theta - r_lo
    s_foot_end = 2.0 * theta - r_lo
    if vacuum:
        s_foot_end = r_lo - 2.0 * min(ctx.w_vac, ctx.R_cal * (1 - 1e-9))
    n_fan = n_fan if n_fan is not None else max(4, n // 2) + 4
    s_fan = np.linspace(s_in, s_foot_end, n_fan + 1) if gap > 1e-12 \
        else np.array([s_in])
    r_vals = np.linspace(r_lo, r_hi, n + 1)
    s_mirror = 2.0 * theta - r_vals
    s_vals = np.concatenate([s_fan, s_mirror])
    s_vals = np.unique(s_vals)[::-1]
    s_vals = s_vals[s_vals <= s_in + 1e-14]
    ni, nj = len(s_vals), len(r_vals)

    X = np.full((ni, nj), np.nan)
    Y = np.full((ni, nj), np.nan)
    xf, yf = incoming.point_at(r_lo)
    for j, r in enumerate(r_vals):
        X[0, j], Y[0, j] = incoming.point_at(r)
    # foot column: the centered wave at the foot (or the trivial foot)
    for i, s in enumerate(s_vals):
        if s >= s_foot_end - 1e-14:
            X[i, 0], Y[i, 0] = xf, yf
    SIG = 0.5 * np.add.outer(s_vals, r_vals)      # (i, j) -> (s_i + r_j)/2
    W = 0.5 * (r_vals[None, :] - s_vals[:, None])
    if not vacuum:
        active = SIG >= theta - 1e-12
        # mid-patch detachment: wall turning r - theta may exhaust the
        # band even when the foot does not
        cut = active & ~(W < ctx.w_vac - 1e-12)
        partial_vacuum = bool(np.any(cut))
        active &= W < ctx.w_vac - 1e-12
    else:
        active = W < ctx.w_vac - 1e-12
        partial_vacuum = False

    # row-sequential march; nodes on the slip line take the incoming
    # minus-characteristic segment against the wall line instead of a
    # second characteristic parent
    ALPHA, BETA = _angles(ctx, *np.meshgrid(r_vals, s_vals, indexing="xy"))
    TA, TB = np.tan(ALPHA), np.tan(BETA)
    tan_w = np.tan(theta)
    xw, yw = wall_anchor
    for i in range(1, ni):
        for j in range(1, nj):
            if not active[i, j] or np.isfinite(X[i, j]):
                continue
            on_wall = not vacuum and abs(SIG[i, j] - theta) < 1e-12
            if not np.isfinite(X[i - 1, j]):
                continue
            tb = 0.5 * (TB[i - 1, j] + TB[i, j])
            xB, yB = X[i - 1, j], Y[i - 1, j]
            if on_wall:
                denom = tan_w - tb
                if abs(denom) < 1e-14:
                    raise LatticeError("incoming characteristic parallel "
                                       "to the wall")
                x = (yB - yw + tan_w * xw - tb * xB) / denom
                y = yw + tan_w * (x - xw)
            else:
                if not np.isfinite(X[i, j - 1]):
                    continue
                ta = 0.5 * (TA[i, j - 1] + TA[i, j])
                xA, yA = X[i, j - 1], Y[i, j - 1]
                denom = ta - tb
                if denom <= 1e-14:
                    raise LatticeError(
                        f"characteristic fold-over at wall cell ({i}, {j})")
                x = (yB - yA + ta * xA - tb * xB) / denom
                y = yA + ta * (x - xA)
            X[i, j], Y[i, j] = x, y
    mask = np.isfinite(X)
    lat = CharLattice(ctx, r_vals, s_vals, X, Y, mask,
                      provenance="wall-reflection")
    lat.edge_roles = {"incoming": ("row", 0), "closing": ("col", nj - 1)}
    lat.wall = (theta, wall_anchor)
    lat.vacuum_ray = None
    if vacuum:
        ang = r_lo - ctx.R_cal
        lat.vacuum_ray = {"origin": (xf, yf), "angle": ang}
    elif partial_vacuum:
        # flow detaches tangentially where the wall turning exhausts the
        # band; emit the boundary from the last resolved wall node
        on_wall = (np.abs(lat.SIGMA - theta) < 1e-11) & lat.mask
        if np.any(on_wall):
            k = np.argmax(np.where(on_wall, lat.X, -np.inf))
            i, j = np.unravel_index(k, lat.X.shape)
            lat.vacuum_ray = {"origin": (lat.X[i, j], lat.Y[i, j]),
                              "angle": max(lat.r_vals[j] - ctx.R_cal,
                                           theta)}
        else:
            lat.vacuum_ray = {"origin": (xf, yf), "angle": theta}
    lat.foot_fan = gap > 1e-12
    return lat


class SimpleWavePatch:
    """Simple-wave region: one characteristic family is straight.

    The patch hangs off a curved data trace of the opposite family; each
    data point emits a ray whose state it carries (both invariants are
    constant along rays of a simple wave, so the cell scheme keeps the
    rays straight without assuming it).  Cross curves of the data
    family are marched from stations along the first ray.

    ray_family=+1: straight plus-characteristics off a minus-family
    data trace (the 2-family simple wave); -1 mirrors the roles.
    """

    def __init__(self, ctx, ray_family, data_trace, X, Y, r_nodes, s_nodes):
        self.ctx = ctx
        self.ray_family = ray_family
        self.data_trace = data_trace
        self.X = X      # shape (n_cross+1, n_rays+1); row 0 = data trace
        self.Y = Y
        self.r_nodes = r_nodes  # per-ray invariants
        self.s_nodes = s_nodes
        self.mask = np.isfinite(X)

    @property
    def shape(self):
        return self.X.shape

    def ray_states(self):
        return [state_from_rs(self.ctx, r, s)
                for r, s in zip(self.r_nodes, self.s_nodes)]

    def straightness_residual(self):
        """Worst relative distance of interior nodes from the chord of
        their ray."""
        worst = 0.0
        for i in range(self.X.shape[1]):
            xs, ys = self.X[:, i], self.Y[:, i]
            dx, dy = xs[-1] - xs[0], ys[-1] - ys[0]
            L = np.hypot(dx, dy)
            if L < 1e-14:
                continue
            d = np.abs(dy * (xs - xs[0]) - dx * (ys - ys[0])) / L
            worst = max(worst, float(np.max(d)) / L)
        return worst

    def terminal_trace(self):
        """The last cross curve (same family as the data trace)."""
        fam = -self.ray_family
        varying = self.s_nodes if fam == -1 else self.r_nodes
        const = self.r_nodes[0] if fam == -1 else self.s_nodes[0]
        return CharTrace(fam, self.X[-1], self.Y[-1], varying, const,
                         self.ctx)

    def last_ray(self):
        return (self.X[:, -1], self.Y[:, -1])

    def node_cloud(self, fields=("u", "v")):
        R = np.tile(self.r_nodes, (self.X.shape[0], 1))
        S = np.tile(self.s_nodes, (self.X.shape[0], 1))
        U, V, TAU = self.ctx.state_arrays_from_rs(R, S)
        pts = np.column_stack([self.X.ravel(), self.Y.ravel()])
        out = {}
        mapping = {"u": U, "v": V, "tau": TAU, "rho": 1.0 / TAU,
                   "sigma": 0.5 * (R + S), "r": R, "s": S}
        for f in fields:
            out[f] = mapping[f].ravel()
        return pts, out


def simple_wave_solve(ctx, data_trace, ray_family, first_ray_length,
                      n_cross=10):
    """Construct the simple wave emitted from `data_trace`.

    Rays leave every data point in the direction of their own
    characteristic angle; cross curves start from `n_cross` stations
    along the first ray (whose length sets the patch depth) and are
    marched across the rays with trapezoidal slopes.
    """
    if data_trace.family == ray_family:
        raise LatticeError("data trace must be of the opposite family")
    vr = data_trace.varying
    n_rays = len(vr) - 1
    rs = [data_trace.rs_at(v) for v in vr]
    r_nodes = np.array([p[0] for p in rs])
    s_nodes = np.array([p[1] for p in rs])
    alpha, beta = ctx.char_angles(r_nodes, s_nodes, fast=True)
    ray_angle = alpha if ray_family == +1 else beta
    cross_angle = beta if ray_family == +1 else alpha
    x0 = np.array([data_trace.point_at(v)[0] for v in vr])
    y0 = np.array([data_trace.point_at(v)[1] for v in vr])

    n_st = n_cross + 1
    X = np.full((n_st, len(vr)), np.nan)
    Y = np.full((n_st, len(vr)), np.nan)
    X[0], Y[0] = x0, y0
    # stations along the first ray
    ts = np.linspace(0.0, first_ray_length, n_st)
    X[:, 0] = x0[0] + ts * np.cos(ray_angle[0])
    Y[:, 0] = y0[0] + ts * np.sin(ray_angle[0])
    for k in range(1, n_st):
        for i in range(1, len(vr)):
            ta = np.tan(ray_angle[i])          # state constant on the ray
            tb = np.tan(0.5 * (cross_angle[i - 1] + cross_angle[i]))
            xA, yA = X[0, i], Y[0, i]          # ray origin
            xB, yB = X[k, i - 1], Y[k, i - 1]  # cross-curve predecessor
            denom = ta - tb
            if abs(denom) < 1e-14:
                raise LatticeError("fold-over in the simple-wave march")
            x = (yB - yA + ta * xA - tb * xB) / denom
            y = yA + ta * (x - xA)
            X[k, i], Y[k, i] = x, y
    return SimpleWavePatch(ctx, ray_family, data_trace, X, Y, r_nodes,
                           s_nodes)


def _char_lattice_mirror(self):
    """Reflect the lattice across the x-axis in place.

    Mirroring maps (r, s) -> (-s, -r), so rows and columns swap roles
    and the grids keep their orientation conventions."""
    extras = {k: v for k, v in self.__dict__.items()
              if k in ("wall", "vacuum_ray", "foot_fan", "edge_roles")}
    new = CharLattice(self.ctx, -self.s_vals, -self.r_vals,
                      self.X.T.copy(), -self.Y.T.copy(),
                      self.mask.T.copy(),
                      provenance=self.provenance + "-mirrored")
    self.__dict__.clear()
    self.__dict__.update(new.__dict__)
    if "wall" in extras:
        theta, anchor = extras["wall"]
        self.wall = (-theta, (anchor[0], -anchor[1]))
    if extras.get("vacuum_ray"):
        vr = extras["vacuum_ray"]
        self.vacuum_ray = {"origin": (vr["origin"][0], -vr["origin"][1]),
                           "angle": -vr["angle"]}
    elif "vacuum_ray" in extras:
        self.vacuum_ray = None
    if "foot_fan" in extras:
        self.foot_fan = extras["foot_fan"]
    if "edge_roles" in extras:
        swap = {"row": "col", "col": "row"}
        self.edge_roles = {k: (swap[axis], idx)
                          for k, (axis, idx) in extras["edge_roles"].items()}
    return self


CharLattice.mirror_in_place = _char_lattice_mirror
