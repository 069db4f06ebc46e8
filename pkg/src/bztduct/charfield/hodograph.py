"""Hodograph-plane solvers: discontinuous Goursat and singular Cauchy.

In the invariant plane the position functions satisfy the linear system

    y_r = tan(alpha(r, s)) x_r,      y_s = tan(beta(r, s)) x_s,

whose coefficients are known pointwise from the state tables.  Two
boundary-value problems are solved on (r, s) domains:

  * the discontinuous Goursat problem: characteristic data on two
    segments whose corner values jump (r+ > r-, s+ > s-); the jump
    inserts two centered waves at the corner, realized by constant
    corner segments of the staircase boundary.  The marching uses
    midpoint-state coefficients (a genuinely different second-order
    discretization from the physical-plane solver, which this one
    cross-validates).

  * the singular Cauchy problem: data on a non-characteristic curve
    s = phi(r) that is everywhere tangent to the plus-characteristic
    direction (a plus-family envelope: the image of a sonic shock);
    the solution fills the region below the curve, where the inverse
    map is certified by x_r > 0 and -x_s > 0.
"""

import numpy as np
from scipy.interpolate import PchipInterpolator

from ..kinematics import VacuumReached, state_from_uv
from .lattice import CharLattice, LatticeError

__all__ = ["hodograph_goursat_solve", "singular_cauchy_solve",
           "CavitationWedge", "InversionError"]


class InversionError(LatticeError):
    """The hodograph-to-physical map failed its invertibility certificate."""


class CavitationWedge:
    """Result marker when the corner jump spans the vacuum width.

    Carries the two centered waves at the corner point and the vacuum
    boundary rays enclosing the wedge."""

    def __init__(self, corner_xy, r_plus, s_minus, R_cal):
        self.corner_xy = corner_xy
        self.r_plus = r_plus
        self.s_minus = s_minus
        self.vacuum_angles = (r_plus - R_cal, s_minus + R_cal)


def _tan_angles_mid(ctx, r, s):
    a, b = ctx.char_angles(np.asarray(r), np.asarray(s), fast=True)
    return np.tan(a), np.tan(b)


def _march_hodograph(ctx, r_vals, s_vals, X, Y, active):
    """March x(r, s), y(r, s) over the grid with midpoint coefficients.

    Node (i, j) integrates the r-relation from its west neighbour
    (i, j-1) with tan(alpha) at the segment midpoint, and the s-relation
    from its north neighbour (i-1, j) (larger s) with tan(beta) at that
    midpoint."""
    ni, nj = len(s_vals), len(r_vals)
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
        rW = 0.5 * (r_vals[jj - 1] + r_vals[jj])
        ta, _ = _tan_angles_mid(ctx, rW, s_vals[ii])
        sN = 0.5 * (s_vals[ii - 1] + s_vals[ii])
        _, tb = _tan_angles_mid(ctx, r_vals[jj], sN)
        xW, yW = X[ii, jj - 1], Y[ii, jj - 1]
        xN, yN = X[ii - 1, jj], Y[ii - 1, jj]
        denom = ta - tb
        if np.any(np.abs(denom) <= 1e-14):
            raise LatticeError("degenerate characteristic pair in the "
                               "hodograph march")
        x = (yN - yW + ta * xW - tb * xN) / denom
        y = yW + ta * (x - xW)
        X[ii, jj], Y[ii, jj] = x, y
        done[ii, jj] = True
    return X, Y


def _certify_invertibility(lat, corner_xy=None):
    """x must increase along r and decrease along s at interior nodes.

    Pairs collapsed onto a centered-wave corner point carry boundary
    data with zero increments and are exempt."""
    X, Y, m = lat.X, lat.Y, lat.mask
    if corner_xy is not None:
        at_corner = (np.abs(X - corner_xy[0]) < 1e-12) \
            & (np.abs(Y - corner_xy[1]) < 1e-12)
    else:
        at_corner = np.zeros_like(m)
    bad_r = []
    dx_r = np.diff(X, axis=1)
    pair_r = m[:, 1:] & m[:, :-1] & ~(at_corner[:, 1:] & at_corner[:, :-1])
    if np.any(pair_r & (dx_r <= 0)):
        i, j = np.nonzero(pair_r & (dx_r <= 0))
        bad_r = list(zip(i[:3], j[:3]))
    dx_s = np.diff(X, axis=0)  # s decreases with i, so x must increase
    pair_s = m[1:, :] & m[:-1, :] & ~(at_corner[1:, :] & at_corner[:-1, :])
    bad_s = []
    if np.any(pair_s & (dx_s <= 0)):
        i, j = np.nonzero(pair_s & (dx_s <= 0))
        bad_s = list(zip(i[:3], j[:3]))
    if bad_r or bad_s:
        raise InversionError(
            f"invertibility certificate failed: x_r <= 0 at {bad_r}, "
            f"-x_s <= 0 at {bad_s}")


def hodograph_goursat_solve(ctx, plus_trace, minus_trace, n_r=40, n_s=40,
                            require_certificate=True):
    """Discontinuous Goursat problem via the hodograph plane.

    plus_trace: plus-characteristic data (s = s_plus, r in [r_plus, r_E]);
    minus_trace: minus-characteristic data (r = r_minus, s in [s_F, s_minus]);
    both start at the same physical corner point but their corner
    invariants may jump (r_plus >= r_minus, s_plus >= s_minus).  The
    degenerate case (no jump) reduces to the standard Goursat problem.
    Returns a CharLattice on the L-shaped invariant domain with the two
    weak-discontinuity grid lines marked, or a CavitationWedge when the
    jump spans the vacuum width.
    """
    if plus_trace.family != +1 or minus_trace.family != -1:
        raise LatticeError("need a (plus, minus) pair of boundary traces")
    s_plus = plus_trace.const_invariant
    r_minus = minus_trace.const_invariant
    r_plus, r_E = plus_trace.r_range
    s_F, s_minus = minus_trace.s_range
    if r_plus < r_minus - 1e-12 or s_plus < s_minus - 1e-12:
        raise LatticeError(
            "corner jump must satisfy r+ >= r- and s+ >= s-; got "
            f"r+={r_plus:.8g}, r-={r_minus:.8g}, s+={s_plus:.8g}, "
            f"s-={s_minus:.8g}")
    xP, yP = plus_trace.point_at(r_plus)
    xP2, yP2 = minus_trace.point_at(s_minus)
    if np.hypot(xP - xP2, yP - yP2) > 1e-7:
        raise LatticeError("boundary curves do not share the corner point")

    if r_plus - s_minus >= 2.0 * ctx.R_cal:
        return CavitationWedge((xP, yP), r_plus, s_minus, ctx.R_cal)

    # grids containing the weak-discontinuity lines r = r_plus, s = s_minus
    jump_r = r_plus - r_minus > 1e-12
    jump_s = s_plus - s_minus > 1e-12
    n_jump_r = max(4, n_r // 3) if jump_r else 0
    n_jump_s = max(4, n_s // 3) if jump_s else 0
    r_vals = np.unique(np.concatenate([
        np.linspace(r_minus, r_plus, n_jump_r + 1),
        np.linspace(r_plus, r_E, n_r + 1)]))
    s_vals = np.unique(np.concatenate([
        np.linspace(s_minus, s_plus, n_jump_s + 1),
        np.linspace(s_F, s_minus, n_s + 1)]))[::-1]
    ni, nj = len(s_vals), len(r_vals)
    j_plus = int(np.argmin(np.abs(r_vals - r_plus)))
    i_minus = int(np.argmin(np.abs(s_vals - s_minus)))

    X = np.full((ni, nj), np.nan)
    Y = np.full((ni, nj), np.nan)
    # top boundary: plus data on s = s_plus, r >= r_plus
    for j in range(j_plus, nj):
        X[0, j], Y[0, j] = plus_trace.point_at(r_vals[j])
    # left boundary of the lower rectangle: minus data on r = r_minus
    for i in range(i_minus, ni):
        X[i, 0], Y[i, 0] = minus_trace.point_at(s_vals[i])
    # corner fill: both centered-wave segments collapse to the corner point
    X[0:i_minus + 1, j_plus] = xP
    Y[0:i_minus + 1, j_plus] = yP
    X[i_minus, 0:j_plus + 1] = xP
    Y[i_minus, 0:j_plus + 1] = yP

    active = np.zeros((ni, nj), dtype=bool)
    active[0:i_minus + 1, j_plus:] = True      # upper rectangle
    active[i_minus:, :] = True                 # lower rectangle
    W = 0.5 * (r_vals[None, :] - s_vals[:, None])
    active &= W < ctx.w_vac - 1e-12
    X, Y = _march_hodograph(ctx, r_vals, s_vals, X, Y, active)

    mask = np.isfinite(X)
    lat = CharLattice(ctx, r_vals, s_vals, X, Y, mask,
                      provenance="hodograph-goursat")
    lat.weak_discontinuities = {
        "r": r_vals[j_plus] if jump_s else None,
        "s": s_vals[i_minus] if jump_r else None,
    }
    lat.corner_index = (i_minus, j_plus)
    if require_certificate:
        _certify_invertibility(lat, corner_xy=(xP, yP))
    return lat


class ShockBackData:
    """Downstream trace of a sonic shock, usable as singular Cauchy data.

    Wraps polyline arrays (x, y, u, v); checks the structural conditions
    dr/dx > 0 and ds/dx > 0 and the plus-characteristic tangency of the
    curve."""

    def __init__(self, ctx, x, y, u, v):
        self.ctx = ctx
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.v = np.asarray(v, dtype=float)
        states = [state_from_uv(ctx, ui, vi) for ui, vi in zip(self.u, self.v)]
        self.r = np.array([st.r for st in states])
        self.s = np.array([st.s for st in states])
        self.alpha = np.array([st.alpha for st in states])

    def structural_margins(self):
        dx = np.diff(self.x)
        return (np.min(np.diff(self.r) / dx), np.min(np.diff(self.s) / dx))

    def tangency_residual(self):
        slopes = np.arctan2(np.diff(self.y), np.diff(self.x))
        mid_alpha = 0.5 * (self.alpha[1:] + self.alpha[:-1])
        return float(np.max(np.abs(slopes - mid_alpha)))


def singular_cauchy_solve(ctx, data, n_r=40, n_s=40, tangency_tol=1e-4):
    """Flow below a plus-characteristic envelope curve.

    `data` is a ShockBackData trace along which both invariants increase
    in x and whose slope equals the local plus-characteristic angle.
    The solution is computed in the invariant plane on the region below
    the image curve s = phi(r) and inverted; row entry points sit on the
    data curve itself.  The returned lattice's plus-direction density
    derivative blows up toward the data curve (envelope signature),
    which `envelope_blowup_ratio` quantifies.
    """
    d_r, d_s = data.structural_margins()
    if d_r <= 0 or d_s <= 0:
        raise LatticeError(
            f"structural conditions violated: min dr/dx={d_r:.3e}, "
            f"min ds/dx={d_s:.3e} (both must be positive)")
    tres = data.tangency_residual()
    if tres > tangency_tol:
        raise LatticeError(
            f"data curve is not plus-characteristic-tangent: worst slope "
            f"gap {tres:.3e}")
    r_F, r_G = data.r[0], data.r[-1]
    s_F, s_G = data.s[0], data.s[-1]
    if r_G - s_F >= 2.0 * ctx.R_cal:
        raise VacuumReached("data span beyond the vacuum bound; split the "
                            "curve")
    phi = PchipInterpolator(data.r, data.s)      # s on the curve
    x_of_r = PchipInterpolator(data.r, data.x)
    y_of_r = PchipInterpolator(data.r, data.y)
    r_of_s = PchipInterpolator(data.s, data.r)

    r_vals = np.linspace(r_F, r_G, n_r + 1)
    s_vals = np.linspace(s_G, s_F, n_s + 1)     # decreasing
    ni, nj = len(s_vals), len(r_vals)
    X = np.full((ni, nj), np.nan)
    Y = np.full((ni, nj), np.nan)
    active = np.zeros((ni, nj), dtype=bool)
    # nodes below the curve: s_i <= phi(r_j)
    for i, s in enumerate(s_vals):
        for j, r in enumerate(r_vals):
            active[i, j] = s <= phi(r) + 1e-13

    # march rows from the top; each row enters through the data curve
    ta_cache, tb_cache = {}, {}
    for i in range(ni):
        s_i = s_vals[i]
        r_entry = float(r_of_s(s_i))
        for j in range(nj):
            if not active[i, j]:
                continue
            r_j = r_vals[j]
            if np.isfinite(X[i, j]):
                continue
            # west neighbour: previous grid node in the row or the entry
            if j > 0 and active[i, j - 1] and np.isfinite(X[i, j - 1]):
                xW, yW, rW = X[i, j - 1], Y[i, j - 1], r_vals[j - 1]
            else:
                if abs(r_j - r_entry) < 1e-13:
                    X[i, j] = float(x_of_r(r_entry))
                    Y[i, j] = float(y_of_r(r_entry))
                    continue
                xW, yW, rW = (float(x_of_r(r_entry)), float(y_of_r(r_entry)),
                              r_entry)
            # north neighbour: node above or the data point on this column
            if i > 0 and active[i - 1, j] and np.isfinite(X[i - 1, j]):
                xN, yN, sN = X[i - 1, j], Y[i - 1, j], s_vals[i - 1]
            else:
                sN = float(phi(r_j))
                xN, yN = float(x_of_r(r_j)), float(y_of_r(r_j))
            ta = np.tan(ctx.char_angles(0.5 * (rW + r_j), s_i)[0])
            tb = np.tan(ctx.char_angles(r_j, 0.5 * (sN + s_i))[1])
            denom = ta - tb
            if abs(denom) < 1e-14:
                raise LatticeError("degenerate characteristic pair in the "
                                   "singular Cauchy march")
            x = (yN - yW + ta * xW - tb * xN) / denom
            y = yW + ta * (x - xW)
            X[i, j], Y[i, j] = x, y

    mask = np.isfinite(X) & active
    lat = CharLattice(ctx, r_vals, s_vals, X, Y, mask,
                      provenance="singular-cauchy")
    _certify_invertibility(lat)
    lat.data_curve = data
    return lat


def envelope_blowup_ratio(ctx, data, n_r=24, levels=(20, 40, 80)):
    """Discrete detection of the derivative blow-up on the data curve.

    Solves the singular Cauchy problem at increasing s-resolutions and
    compares the plus-direction density difference quotient in the first
    cell below the curve with the one deeper inside: for an envelope the
    near-curve quotient grows without bound under refinement."""
    ratios = []
    for n_s in levels:
        lat = singular_cauchy_solve(ctx, data, n_r=n_r, n_s=n_s)
        g = lat.char_gradients()["rho_minus"]
        # compare the top interior band with the mid-depth band
        col = lat.shape[1] // 2
        rows = np.nonzero(lat.mask[:, col])[0]
        near = abs(g[rows[1], col])
        mid = abs(g[rows[len(rows) // 2], col])
        ratios.append(near / max(mid, 1e-300))
    return ratios
