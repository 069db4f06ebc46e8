"""End-to-end duct solvers: corner waves, their interaction, transmitted
simple waves, wall reflections and repeat cycles.

Geometry: corners B(0, 1) and D(0, -1); walls y = +-1 + x tan(theta_pm).
The inlet stream (u0, 0, tau0) enters at x = 0.

The fully orchestrated interactions are

    fan x fan              (dilute-branch anchor volume),
    shock-fan x shock-fan  (concave-interval anchor, hodograph corner
                            jump at the collision point),
    fan x shock-fan        (post-sonic shock refitted through the upper
                            fan, singular Cauchy behind it).

All three share the downstream cascade: the central patch's exit
characteristics spawn simple waves that run to the walls, reflect, and
feed the next interaction cycle.  Every patch is recorded as a Region
with its boundary polygon, so discrete flux balances and probes can be
evaluated per region.
"""

import numpy as np

from .kinematics import (state_from_rs, state_from_tau_sigma, state_from_uv,
                         VacuumReached)
from .corner import solve_ramp, classify_interaction
from .shock import post_sonic_corner_state, solve_oblique_shock
from .wave_curves import integrate_fan
from .charfield.lattice import (CharTrace, goursat_solve,
                                wall_reflection_solve, simple_wave_solve,
                                LatticeError)
from .charfield.hodograph import (hodograph_goursat_solve,
                                  singular_cauchy_solve, CavitationWedge)
from .charfield.shockfit import shock_fit_post_sonic
from .charfield.fields import CenteredFanField

__all__ = ["DuctParams", "DuctSolution", "Region", "run_fan_fan",
           "run_sf_sf", "run_f_sf", "run_duct", "case_atlas",
           "PipelineError"]


class PipelineError(ValueError):
    pass


class DuctParams:
    """Validated duct-run parameters (geometry and resolutions)."""

    def __init__(self, theta_plus, theta_minus, n_lattice=40, n_cross=10,
                 max_cycles=2, strength_tol=1e-6, x_max=None):
        if not 0 < theta_plus < np.pi / 2:
            raise PipelineError("theta_plus must lie in (0, pi/2)")
        if not -np.pi / 2 < theta_minus < 0:
            raise PipelineError("theta_minus must lie in (-pi/2, 0)")
        self.theta_plus = theta_plus
        self.theta_minus = theta_minus
        self.n_lattice = n_lattice
        self.n_cross = n_cross
        self.max_cycles = max_cycles
        self.strength_tol = strength_tol
        self.x_max = x_max


def _upsample_edge(edge, n):
    from scipy.interpolate import PchipInterpolator
    xs, ys, us, vs, ts = edge
    if len(xs) < 3:
        ss = np.linspace(0.0, 1.0, len(xs))
    else:
        ss = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(xs),
                                                       np.diff(ys)))])
        if ss[-1] < 1e-300:
            return edge
        ss = ss / ss[-1]
    keep = np.concatenate([[True], np.diff(ss) > 1e-14])
    xs, ys, us, vs, ts, ss = (a[keep] for a in (xs, ys, us, vs, ts, ss))
    if len(ss) < 2:
        return edge
    t = np.linspace(0.0, 1.0, n)
    out = []
    for arr in (xs, ys, us, vs, ts):
        if len(ss) < 4:
            out.append(np.interp(t, ss, arr))
        else:
            out.append(PchipInterpolator(ss, arr)(t))
    return tuple(out)


class Region:
    """One flow region: kind, closed boundary loop and a state sampler.

    boundary: list of edges; an edge is (xs, ys, us, vs, taus) arrays
    ordered so the loop is counterclockwise."""

    def __init__(self, rid, kind, edges, payload=None):
        self.id = rid
        self.kind = kind
        self.edges = edges
        self.payload = payload

    def boundary_arrays(self, n_per_edge=None):
        edges = self.edges if n_per_edge is None else \
            [_upsample_edge(e, n_per_edge) for e in self.edges]
        xs = np.concatenate([e[0] for e in edges])
        ys = np.concatenate([e[1] for e in edges])
        us = np.concatenate([e[2] for e in edges])
        vs = np.concatenate([e[3] for e in edges])
        ts = np.concatenate([e[4] for e in edges])
        return xs, ys, us, vs, ts

    def flux_imbalance(self, n_per_edge=300):
        """Discrete mass-flux integral around the loop, relative to the
        mean through-flux scale.

        Edges are upsampled (monotone cubic in arclength) before the
        trapezoidal quadrature so the boundary resolution, not the
        lattice resolution, limits the closure."""
        xs, ys, us, vs, ts = self.boundary_arrays(n_per_edge)
        rho = 1.0 / ts
        fx, fy = rho * us, rho * vs
        dx = np.diff(np.append(xs, xs[0]))
        dy = np.diff(np.append(ys, ys[0]))
        fx_mid = 0.5 * (fx + np.roll(fx, -1))
        fy_mid = 0.5 * (fy + np.roll(fy, -1))
        # outward flux with the loop counterclockwise: n ds = (dy, -dx)
        net = np.sum(fx_mid * dy - fy_mid * dx)
        scale = np.sum(np.hypot(fx_mid, fy_mid) * np.hypot(dx, dy))
        return abs(net) / max(scale, 1e-300)

    def area(self):
        xs, ys, *_ = self.boundary_arrays()
        x2, y2 = np.append(xs, xs[0]), np.append(ys, ys[0])
        return 0.5 * abs(np.sum(x2[:-1] * y2[1:] - x2[1:] * y2[:-1]))


class DuctSolution:
    """Region catalogue plus shock/vacuum polylines of one duct run."""

    def __init__(self, ctx, params, interaction):
        self.ctx = ctx
        self.params = params
        self.interaction = interaction
        self.regions = []
        self.shock_polylines = []
        self.vacuum_polylines = []
        self.adjacency = []
        self.cycles_run = 0
        self.truncated = False
        self.notes = []

    def add_region(self, kind, edges, payload=None):
        reg = Region(len(self.regions), kind, edges, payload)
        self.regions.append(reg)
        return reg

    def add_shock(self, xs, ys, phis, tau_up, tau_down, label,
                  sonic_class=None):
        self.shock_polylines.append({
            "label": label, "x": np.asarray(xs), "y": np.asarray(ys),
            "phi": np.asarray(phis), "tau_up": np.asarray(tau_up),
            "tau_down": np.asarray(tau_down),
            "class": sonic_class,
        })

    def add_vacuum(self, xs, ys, label):
        self.vacuum_polylines.append({"label": label, "x": np.asarray(xs),
                                      "y": np.asarray(ys)})

    @property
    def has_vacuum(self):
        return len(self.vacuum_polylines) > 0

    def worst_flux_imbalance(self):
        return max((r.flux_imbalance() for r in self.regions), default=0.0)

    def region_kinds(self):
        return [r.kind for r in self.regions]

    def node_cloud(self):
        """All solution samples (x, y, u, v, tau) over every region."""
        pts, us, vs, ts = [], [], [], []
        for reg in self.regions:
            pay = reg.payload
            if hasattr(pay, "node_cloud"):
                p, vals = pay.node_cloud(("u", "v", "tau"))
                pts.append(p)
                us.append(vals["u"])
                vs.append(vals["v"])
                ts.append(vals["tau"])
            else:
                xs, ys, uu, vv, tt = reg.boundary_arrays()
                pts.append(np.column_stack([xs, ys]))
                us.append(uu)
                vs.append(vv)
                ts.append(tt)
        return (np.vstack(pts), np.concatenate(us), np.concatenate(vs),
                np.concatenate(ts))

    def probe(self, x, y):
        """Interpolated (u, v, tau) at a point, linear over the sample
        cloud."""
        if not hasattr(self, "_probe_interp"):
            from scipy.interpolate import (LinearNDInterpolator,
                                           NearestNDInterpolator)
            pts, us, vs, ts = self.node_cloud()
            vals = np.column_stack([us, vs, ts])
            self._probe_interp = LinearNDInterpolator(pts, vals)
            self._probe_near = NearestNDInterpolator(pts, vals)
        row = self._probe_interp(x, y)
        if np.any(np.isnan(row)):
            row = self._probe_near(x, y)
        return np.atleast_2d(row)[0]

    def mirror_residual(self):
        """Worst mismatch between the solution's sample cloud and its
        reflection across the axis (exact zero for a symmetric duct
        solved symmetrically).

        Fan centers are multivalued points (every ray collapses there);
        a mirrored sample is accepted if any coincident node carries the
        mirrored state."""
        from scipy.spatial import cKDTree
        pts, us, vs, ts = self.node_cloud()
        tree = cKDTree(pts)
        mirrored = np.column_stack([pts[:, 0], -pts[:, 1]])
        dist, idx = tree.query(mirrored)
        du = np.abs(us[idx] - us)
        dv = np.abs(vs[idx] + vs)
        worst = np.maximum(du, dv)
        out = 0.0
        for k in np.nonzero(worst > 1e-12)[0]:
            near = tree.query_ball_point(mirrored[k], 1e-9)
            best = min(max(abs(us[j] - us[k]), abs(vs[j] + vs[k]))
                       for j in near) if near else worst[k]
            out = max(out, best)
        return float(max(dist.max(), out))


# --- geometric helpers -----------------------------------------------------


def _edge_const(p0, p1, state, n=8):
    xs = np.linspace(p0[0], p1[0], n)
    ys = np.linspace(p0[1], p1[1], n)
    return (xs, ys, np.full(n, state.u), np.full(n, state.v),
            np.full(n, state.tau))


def _edge_trace(ctx, trace, reverse=False, n=None):
    vv = trace.varying
    if n is not None:
        vv = np.linspace(vv.min(), vv.max(), n)
    vv = np.sort(vv)
    if reverse:
        vv = vv[::-1]
    xs = np.array([trace.point_at(v) for v in vv])
    rr = np.array([trace.rs_at(v) for v in vv])
    u, v, tau = ctx.state_arrays_from_rs(rr[:, 0], rr[:, 1])
    return xs[:, 0], xs[:, 1], u, v, tau


def _edge_fan_arc(ctx, fan, center, radius_of_angle, a_from, a_to, n=24):
    angs = np.linspace(a_from, a_to, n)
    xs, ys, us, vs, ts = [], [], [], [], []
    for a in angs:
        R = radius_of_angle(a)
        st = fan.state_at_angle(a)
        xs.append(center[0] + R * np.cos(a))
        ys.append(center[1] + R * np.sin(a))
        us.append(st.u)
        vs.append(st.v)
        ts.append(st.tau)
    return (np.array(xs), np.array(ys), np.array(us), np.array(vs),
            np.array(ts))


def _wall_hit(p0, ang, wall_theta, wall_y0):
    """Intersection of the ray from p0 at angle `ang` with the wall
    y = wall_y0 + x tan(wall_theta)."""
    t = np.tan(ang)
    tw = np.tan(wall_theta)
    x = (p0[1] - t * p0[0] - wall_y0) / (tw - t)
    return x, wall_y0 + tw * x


class RaySystem:
    """A simple wave presented as a family of straight state-carrying
    rays (origins may coincide for a centered fan)."""

    def __init__(self, ctx, origins, angles, r_vals, s_vals):
        self.ctx = ctx
        self.origins = np.asarray(origins, dtype=float)
        self.angles = np.asarray(angles, dtype=float)
        self.r_vals = np.asarray(r_vals, dtype=float)
        self.s_vals = np.asarray(s_vals, dtype=float)

    @classmethod
    def from_fan(cls, ctx, fan, center, n=80):
        taus = np.linspace(fan.tau_start, fan.tau_end, n)
        sts = [fan.state_at_tau(t) for t in taus]
        angles = np.array([st.sigma + fan.family * st.A for st in sts])
        org = np.tile(np.asarray(center, dtype=float), (n, 1))
        return cls(ctx, org, angles, np.array([st.r for st in sts]),
                   np.array([st.s for st in sts]))

    @classmethod
    def from_trace(cls, ctx, trace, ray_family, n=None, descending=False):
        vv = np.sort(trace.varying)
        if n is not None:
            vv = np.linspace(vv[0], vv[-1], n)
        if descending:
            vv = vv[::-1]
        pts = np.array([trace.point_at(v) for v in vv])
        rr = np.array([trace.rs_at(v) for v in vv])
        a, b = ctx.char_angles(rr[:, 0], rr[:, 1], fast=True)
        ang = a if ray_family == +1 else b
        return cls(ctx, pts, np.asarray(ang), rr[:, 0], rr[:, 1])

    @property
    def family(self):
        # straight rays are plus-characteristics when angle = alpha
        a, b = self.ctx.char_angles(self.r_vals, self.s_vals, fast=True)
        return +1 if np.allclose(self.angles, a, atol=1e-9) else -1

    def ray_index_span(self):
        return len(self.angles)

    def cross_trace(self, start_xy, start_index=0):
        """Characteristic of the opposite family from `start_xy` (on the
        ray `start_index`) across all remaining rays."""
        fam = self.family
        n = len(self.angles)
        a_all, b_all = self.ctx.char_angles(self.r_vals, self.s_vals,
                                            fast=True)
        cross = b_all if fam == +1 else a_all
        xs = [start_xy[0]]
        ys = [start_xy[1]]
        for i in range(start_index + 1, n):
            t = np.tan(0.5 * (cross[i - 1] + cross[i]))
            ta = np.tan(self.angles[i])
            x0, y0 = self.origins[i]
            denom = ta - t
            if abs(denom) < 1e-14:
                raise PipelineError("cross-characteristic parallel to ray")
            x = (ys[-1] - y0 + ta * x0 - t * xs[-1]) / denom
            y = ys[-1] + t * (x - xs[-1])
            xs.append(x)
            ys.append(y)
        idx = np.arange(start_index, n)
        if fam == +1:
            varying = self.s_vals[idx]
            const = self.r_vals[start_index]
            return CharTrace(-1, np.array(xs), np.array(ys), varying,
                             const, self.ctx)
        varying = self.r_vals[idx]
        const = self.s_vals[start_index]
        return CharTrace(+1, np.array(xs), np.array(ys), varying, const,
                         self.ctx)

    def last_ray(self):
        return self.origins[-1], self.angles[-1], \
            (self.r_vals[-1], self.s_vals[-1])

    def first_ray(self):
        return self.origins[0], self.angles[0], \
            (self.r_vals[0], self.s_vals[0])


# --- the shared downstream cascade ------------------------------------------


def _transmitted_wave_regions(ctx, sol, lat, params):
    """Simple waves off the central patch's exit characteristics, run to
    the walls; returns the wall-incoming traces and region records."""
    th_p, th_m = params.theta_plus, params.theta_minus
    # upper transmitted wave: plus-family rays off the last minus column
    exit_up = lat.col_trace(lat.shape[1] - 1)
    st_E = state_from_rs(ctx, exit_up.const_invariant,
                         float(exit_up.varying.max()))
    E_xy = exit_up.point_at(exit_up.varying.max())
    G_xy = _wall_hit(E_xy, st_E.alpha, th_p, 1.0)
    lenEG = np.hypot(G_xy[0] - E_xy[0], G_xy[1] - E_xy[1])
    up_wave = simple_wave_solve(ctx, exit_up, +1, lenEG,
                                n_cross=params.n_cross)
    sol.add_region("simple-wave", _patch_edges_simple(ctx, up_wave),
                   payload=up_wave)

    exit_lo = lat.row_trace(lat.shape[0] - 1)
    st_F = state_from_rs(ctx, float(exit_lo.varying.min()),
                         exit_lo.const_invariant)
    F_xy = exit_lo.point_at(exit_lo.varying.min())
    H_xy = _wall_hit(F_xy, st_F.beta, th_m, -1.0)
    lenFH = np.hypot(H_xy[0] - F_xy[0], H_xy[1] - F_xy[1])
    lo_wave = simple_wave_solve(ctx, exit_lo, -1, lenFH,
                                n_cross=params.n_cross)
    sol.add_region("simple-wave", _patch_edges_simple(ctx, lo_wave),
                   payload=lo_wave)
    return up_wave, lo_wave, (E_xy, G_xy), (F_xy, H_xy)


def _patch_edges_simple(ctx, patch):
    pts, vals = patch.node_cloud(("u", "v", "tau"))
    n_st, n_rays = patch.shape

    def edge(sel, reverse=False):
        idx = sel if not reverse else sel[::-1]
        return (pts[idx, 0], pts[idx, 1], vals["u"][idx], vals["v"][idx],
                vals["tau"][idx])

    grid = np.arange(n_st * n_rays).reshape(n_st, n_rays)
    return [edge(grid[0, :]), edge(grid[:, -1]),
            edge(grid[-1, ::-1]), edge(grid[::-1, 0])]


def _lattice_edges(ctx, lat):
    m = lat.mask

    def edge(ii, jj, reverse=False):
        ii = np.asarray(ii)
        jj = np.asarray(jj)
        ok = m[ii, jj]
        ii, jj = ii[ok], jj[ok]
        if reverse:
            ii, jj = ii[::-1], jj[::-1]
        return (lat.X[ii, jj], lat.Y[ii, jj], lat.U[ii, jj],
                lat.V[ii, jj], lat.TAU[ii, jj])

    ni, nj = lat.shape
    top = edge(np.zeros(nj, int), np.arange(nj))
    right = edge(np.arange(ni), np.full(ni, nj - 1))
    bottom = edge(np.full(nj, ni - 1), np.arange(nj)[::-1])
    left = edge(np.arange(ni)[::-1], np.zeros(ni, int))
    return [top, right, bottom, left]


def _wall_patch_edges(ctx, lat):
    """Incoming boundary, closing characteristic and the wall chain of a
    reflection half-lattice (orientation from the lattice edge roles)."""
    m = lat.mask
    theta = lat.wall[0]

    def axis_nodes(axis, idx):
        if axis == "row":
            return [(idx, j) for j in range(lat.shape[1]) if m[idx, j]]
        return [(i, idx) for i in range(lat.shape[0]) if m[i, idx]]

    def nodes_edge(idx_list):
        ii = np.array([k[0] for k in idx_list])
        jj = np.array([k[1] for k in idx_list])
        return (lat.X[ii, jj], lat.Y[ii, jj], lat.U[ii, jj],
                lat.V[ii, jj], lat.TAU[ii, jj])

    incoming = axis_nodes(*lat.edge_roles["incoming"])
    closing = axis_nodes(*lat.edge_roles["closing"])
    on_wall = np.abs(lat.SIGMA - theta) < 1e-11
    wall_nodes = [(i, j) for i, j in zip(*np.nonzero(on_wall & m))]
    wall_nodes = sorted(set(wall_nodes),
                        key=lambda k: lat.X[k[0], k[1]], reverse=True)
    # orient: incoming from the wall foot outward, closing toward the
    # wall, wall chain back to the foot
    if np.hypot(lat.X[incoming[0]] - lat.X[wall_nodes[-1]],
                lat.Y[incoming[0]] - lat.Y[wall_nodes[-1]]) >        np.hypot(lat.X[incoming[-1]] - lat.X[wall_nodes[-1]],
                lat.Y[incoming[-1]] - lat.Y[wall_nodes[-1]]):
        incoming = incoming[::-1]
    if np.hypot(lat.X[closing[0]] - lat.X[incoming[-1]],
                lat.Y[closing[0]] - lat.Y[incoming[-1]]) > 1e-9:
        closing = closing[::-1]
    return [nodes_edge(incoming), nodes_edge(closing),
            nodes_edge(wall_nodes)]


def _cauchy_edges(ctx, lat):
    """Data curve, closing column and bottom row of a singular Cauchy
    patch."""
    data = lat.data_curve
    taus = [ctx.tau_of_q(float(np.hypot(u, v)))
            for u, v in zip(data.u, data.v)]
    curve = (data.x, data.y, data.u, data.v, np.array(taus))
    m = lat.mask
    ni, nj = lat.shape

    def arr_edge(ii, jj, reverse=False):
        ii, jj = np.asarray(ii), np.asarray(jj)
        ok = m[ii, jj]
        ii, jj = ii[ok], jj[ok]
        if reverse:
            ii, jj = ii[::-1], jj[::-1]
        return (lat.X[ii, jj], lat.Y[ii, jj], lat.U[ii, jj],
                lat.V[ii, jj], lat.TAU[ii, jj])

    right = arr_edge(np.arange(ni), np.full(ni, nj - 1))       # G -> H
    bottom = arr_edge(np.full(nj, ni - 1), np.arange(nj)[::-1])  # H -> P
    return [curve, right, bottom]


def _reflect_and_record(ctx, sol, wave, wall_theta, wall_anchor, side,
                        params):
    incoming = wave.terminal_trace()
    refl = wall_reflection_solve(ctx, incoming, wall_theta, wall_anchor,
                                 side=side, n=params.n_lattice // 2)
    sol.add_region("wall-patch", _wall_patch_edges(ctx, refl), payload=refl)
    if refl.vacuum_ray is not None:
        org = refl.vacuum_ray["origin"]
        ang = refl.vacuum_ray["angle"]
        L = 2.0
        sol.add_vacuum([org[0], org[0] + L * np.cos(ang)],
                       [org[1], org[1] + L * np.sin(ang)],
                       f"wall-cavitation-{side}")
    return refl


def _cascade(ctx, sol, central, params, start_cycle=1):
    """Transmitted waves, wall reflections and repeat interactions."""
    th_p, th_m = params.theta_plus, params.theta_minus
    lat = central
    for cycle in range(start_cycle, params.max_cycles + 1):
        sol.cycles_run = cycle
        up_wave, lo_wave, (E_xy, G_xy), (F_xy, H_xy) = \
            _transmitted_wave_regions(ctx, sol, lat, params)

        refl_up = _reflect_and_record(ctx, sol, up_wave, th_p, G_xy,
                                      "upper", params)
        refl_lo = _reflect_and_record(ctx, sol, lo_wave, th_m, H_xy,
                                      "lower", params)
        if refl_up.vacuum_ray is not None or refl_lo.vacuum_ray is not None:
            sol.truncated = True
            break

        # middle constant region between the two transmitted waves
        st_I = state_from_rs(ctx, lat.r_vals[-1], lat.s_vals[-1])
        I_xy = (lat.X[-1, -1], lat.Y[-1, -1])
        Jt = up_wave.terminal_trace()
        J_xy = Jt.point_at(Jt.varying.min() if Jt.family == -1
                           else Jt.varying.max())
        Kt = lo_wave.terminal_trace()
        K_xy = Kt.point_at(Kt.varying.max() if Kt.family == +1
                           else Kt.varying.min())
        # next collision point: straight characteristics from J and K
        N_xy = _ray_intersect(J_xy, st_I.beta, K_xy, st_I.alpha)
        sol.add_region("constant", [
            _edge_const(I_xy, J_xy, st_I), _edge_const(J_xy, N_xy, st_I),
            _edge_const(N_xy, K_xy, st_I), _edge_const(K_xy, I_xy, st_I),
        ], payload=st_I)

        if cycle == params.max_cycles:
            break
        # next interaction: cross-characteristics through the reflected
        # waves from N
        up_sys = _reflected_wave_system(ctx, refl_up, "upper")
        lo_sys = _reflected_wave_system(ctx, refl_lo, "lower")
        strength = max(np.ptp(up_sys.r_vals), np.ptp(up_sys.s_vals),
                       np.ptp(lo_sys.r_vals), np.ptp(lo_sys.s_vals))
        if strength < params.strength_tol:
            sol.notes.append(f"cycle {cycle}: residual wave strength "
                             f"{strength:.2e} below threshold")
            break
        plus_trace = _cross_from(ctx, up_sys, N_xy)
        minus_trace = _cross_from(ctx, lo_sys, N_xy)
        try:
            lat = goursat_solve(ctx, plus_trace, minus_trace,
                                params.n_lattice, params.n_lattice)
        except VacuumReached:
            sol.truncated = True
            sol.notes.append(f"cycle {cycle + 1}: interaction patch does "
                             "not close before the vacuum bound")
            break
        sol.add_region("goursat-patch", _lattice_edges(ctx, lat),
                       payload=lat)
    return sol


def _ray_intersect(p0, ang0, p1, ang1):
    t0, t1 = np.tan(ang0), np.tan(ang1)
    x = (p1[1] - p0[1] + t0 * p0[0] - t1 * p1[0]) / (t0 - t1)
    return (x, p0[1] + t0 * (x - p0[0]))


def _reflected_wave_system(ctx, refl, side):
    """Rays of the wave emitted by a wall patch (its closing trace),
    ordered from the wave's leading edge (away from the wall)."""
    axis, idx = refl.edge_roles["closing"]
    closing = refl.row_trace(idx) if axis == "row" else refl.col_trace(idx)
    if side == "lower":
        # minus-closing trace varies in s; the leading ray has the top s
        return RaySystem.from_trace(ctx, closing, +1, descending=True)
    return RaySystem.from_trace(ctx, closing, -1)


def _cross_from(ctx, system, start_xy):
    """Cross-characteristic through a ray system starting on its first
    ray at the given point."""
    return system.cross_trace(start_xy, 0)


# --- corner-stage helpers ---------------------------------------------------


def _corner_fan(sol_corner):
    fans = [s for s in sol_corner.sectors if s.kind == "fan"]
    return fans[0].fan if fans else None


def _record_corner_regions(ctx, sol, corner_sol, P_xy, cross, params):
    """Constant wedge + fan sector + trailing constant for one corner."""
    side = corner_sol.side
    center = corner_sol.center
    fan = _corner_fan(corner_sol)
    lead = corner_sol.leading_angle()
    inlet = state_from_tau_sigma(ctx, ctx.tau0, 0.0)
    # incoming constant wedge: inlet rectangle up to the leading ray
    x0 = 0.0
    sol.add_region("constant", [
        _edge_const((x0, 0.0), (x0, center[1]), inlet),
        _edge_const((x0, center[1]), P_xy, inlet),
        _edge_const(P_xy, (x0, 0.0), inlet),
    ], payload=inlet)
    if fan is None:
        return
    # fan sector polygon: corner -> first-ray -> cross-char -> last ray
    fan_obj = fan
    if side == "lower":
        a_hi, a_lo = fan_obj.angle_start, fan_obj.angle_end
        radius = _trace_radius_fn(cross, center)
        edges = [
            _edge_const(center, P_xy, state_from_tau_sigma(
                ctx, fan_obj.tau_start, fan_obj.sigma[0])),
            _edge_fan_arc(ctx, fan_obj, center, radius, a_hi, a_lo),
        ]
        end_xy = (center[0] + radius(a_lo) * np.cos(a_lo),
                  center[1] + radius(a_lo) * np.sin(a_lo))
        st_end = fan_obj.state_at_angle(a_lo)
        edges.append(_edge_const(end_xy, center, st_end))
        sol.add_region("fan", edges, payload=fan_obj)
    else:
        a_lo, a_hi = -fan_obj.angle_start, -fan_obj.angle_end
        radius = _trace_radius_fn(cross, center)

        def mirrored_state(a):
            return fan_obj.state_at_angle(-a).mirrored()

        angs = np.linspace(a_lo, a_hi, 24)
        xs = center[0] + np.array([radius(a) for a in angs]) * np.cos(angs)
        ys = center[1] + np.array([radius(a) for a in angs]) * np.sin(angs)
        sts = [mirrored_state(a) for a in angs]
        arc = (xs, ys, np.array([s.u for s in sts]),
               np.array([s.v for s in sts]),
               np.array([s.tau for s in sts]))
        edges = [
            _edge_const(center, P_xy, sts[0]),
            arc,
            _edge_const((xs[-1], ys[-1]), center, sts[-1]),
        ]
        sol.add_region("fan", edges, payload=fan_obj)


def _trace_radius_fn(trace, center):
    xs, ys = trace.x, trace.y
    angs = np.arctan2(ys - center[1], xs - center[0])
    rads = np.hypot(xs - center[0], ys - center[1])
    order = np.argsort(angs)
    from scipy.interpolate import PchipInterpolator
    interp = PchipInterpolator(angs[order], rads[order])
    lo, hi = angs.min(), angs.max()
    return lambda a: float(interp(np.clip(a, lo, hi)))


# --- pipelines ---------------------------------------------------------------


def run_fan_fan(ctx, params):
    """Interaction of two corner fans with the full reflection cascade."""
    low = solve_ramp(ctx, params.theta_minus, "lower")
    up = solve_ramp(ctx, params.theta_plus, "upper")
    inter = classify_interaction(up, low)
    sol = DuctSolution(ctx, params, inter)
    if low.base_tag != "f" or up.base_tag != "f":
        raise PipelineError(
            f"fan-fan pipeline needs fan corners, got {inter['pair']}")

    if low.has_vacuum or up.has_vacuum:
        _record_vacuum_corners(ctx, sol, low, up)
        sol.truncated = True
        return sol

    fan_d = _corner_fan(low)
    inlet = state_from_tau_sigma(ctx, ctx.tau0, 0.0)
    fan_b = integrate_fan(ctx, inlet, -1, stop_sigma=params.theta_plus)
    xi0 = fan_d.angle_start
    P = (1.0 / np.tan(xi0), 0.0)
    d_sys = RaySystem.from_fan(ctx, fan_d, (0.0, -1.0))
    minus_trace = d_sys.cross_trace(P, 0)
    b_sys = RaySystem.from_fan(ctx, fan_b, (0.0, 1.0))
    plus_trace = b_sys.cross_trace(P, 0)

    _record_corner_regions(ctx, sol, low, P, minus_trace, params)
    _record_corner_regions(ctx, sol, up, P, plus_trace, params)
    _record_wall_constants(ctx, sol, low, up, minus_trace, plus_trace,
                           params)

    lat = goursat_solve(ctx, plus_trace, minus_trace, params.n_lattice,
                        params.n_lattice)
    sol.add_region("goursat-patch", _lattice_edges(ctx, lat), payload=lat)
    return _cascade(ctx, sol, lat, params)


def _record_vacuum_corners(ctx, sol, low, up):
    for cs in (low, up):
        if cs.has_vacuum:
            org = cs.center
            ang = cs.vacuum_angle
            L = 3.0
            sol.add_vacuum([org[0], org[0] + L * np.cos(ang)],
                           [org[1], org[1] + L * np.sin(ang)],
                           f"corner-cavitation-{cs.side}")
            sol.notes.append(
                f"{cs.side} corner opens beyond the full turning width; "
                "flow detaches from the wall")


def _record_wall_constants(ctx, sol, low, up, minus_trace, plus_trace,
                           params):
    """Constant triangles between the corner waves' last rays and the
    walls."""
    for cs, trace in ((low, minus_trace), (up, plus_trace)):
        if cs is None:
            continue
        st = cs.terminal_state
        center = cs.center
        wall_th = params.theta_minus if cs.side == "lower" \
            else params.theta_plus
        v_end = trace.varying.min() if cs.side == "lower" \
            else trace.varying.max()
        F_xy = trace.point_at(v_end)
        ray_ang = st.alpha if cs.side == "upper" else st.beta
        W_xy = _wall_hit(F_xy, ray_ang, wall_th, center[1])
        sol.add_region("constant", [
            _edge_const(center, F_xy, st),
            _edge_const(F_xy, W_xy, st),
            _edge_const(W_xy, center, st),
        ], payload=st)


def run_sf_sf(ctx, params):
    """Interaction of two shock-fan composite corner waves."""
    low = solve_ramp(ctx, params.theta_minus, "lower")
    up = solve_ramp(ctx, params.theta_plus, "upper")
    inter = classify_interaction(up, low)
    sol = DuctSolution(ctx, params, inter)
    if low.base_tag != "sf" or up.base_tag != "sf":
        raise PipelineError(
            f"sf-sf pipeline needs shock-fan corners, got {inter['pair']}")

    phi_po, u_po, v_po, tau_po = post_sonic_corner_state(ctx)
    P = (1.0 / np.tan(phi_po), 0.0)
    # corner shocks: straight rays to the collision point
    sol.add_shock([0.0, P[0]], [-1.0, P[1]], [phi_po] * 2,
                  [ctx.tau0] * 2, [tau_po] * 2, "corner-shock-lower",
                  "post-sonic")
    sol.add_shock([0.0, P[0]], [1.0, P[1]], [-phi_po] * 2,
                  [ctx.tau0] * 2, [tau_po] * 2, "corner-shock-upper",
                  "post-sonic")

    fan_d = _corner_fan(low)
    d_sys = RaySystem.from_fan(ctx, fan_d, (0.0, -1.0))
    minus_trace = d_sys.cross_trace(P, 0)
    st_po_up = state_from_uv(ctx, u_po, -v_po)
    fan_b = integrate_fan(ctx, st_po_up, -1, stop_sigma=params.theta_plus)
    b_sys = RaySystem.from_fan(ctx, fan_b, (0.0, 1.0))
    plus_trace = b_sys.cross_trace(P, 0)
    _record_corner_regions(ctx, sol, low, P, minus_trace, params)
    _record_corner_regions(ctx, sol, up, P, plus_trace, params)
    _record_wall_constants(ctx, sol, low, up, minus_trace, plus_trace,
                           params)

    central = hodograph_goursat_solve(ctx, plus_trace, minus_trace,
                                      params.n_lattice, params.n_lattice)
    if isinstance(central, CavitationWedge):
        a_hi, a_lo = central.vacuum_angles
        for ang, lab in ((a_hi, "upper"), (a_lo, "lower")):
            L = 2.0
            sol.add_vacuum([P[0], P[0] + L * np.cos(ang)],
                           [P[1], P[1] + L * np.sin(ang)],
                           f"collision-cavitation-{lab}")
        sol.truncated = True
        sol.notes.append("corner jump spans the vacuum width; centered "
                         "waves enclose a cavitation wedge")
        return sol
    sol.add_region("centered-wave", _lattice_edges(ctx, central),
                   payload=central)
    return _cascade(ctx, sol, central, params)


def run_f_sf(ctx, params, n_shock_out=120):
    """Fan (upper corner) against a shock-fan composite wave (lower)."""
    low = solve_ramp(ctx, params.theta_minus, "lower")
    up = solve_ramp(ctx, params.theta_plus, "upper")
    inter = classify_interaction(up, low)
    sol = DuctSolution(ctx, params, inter)
    if low.base_tag != "sf" or up.base_tag != "f":
        raise PipelineError(
            f"fan x shock-fan pipeline got {inter['pair']}")

    phi_po, u_po, v_po, tau_po = post_sonic_corner_state(ctx)
    inlet = state_from_tau_sigma(ctx, ctx.tau0, 0.0)
    fan_b = integrate_fan(ctx, inlet, -1, stop_sigma=params.theta_plus)
    field_b = CenteredFanField(fan_b, (0.0, 1.0))
    eta_head = min(fan_b.angle_start, fan_b.angle_end)
    eta_last = max(fan_b.angle_start, fan_b.angle_end)
    xP = 2.0 / (np.tan(phi_po) - np.tan(eta_head))
    yP = 1.0 + xP * np.tan(eta_head)

    def stop(x, y, phi):
        return np.arctan2(y - 1.0, x) - eta_last

    fit = shock_fit_post_sonic(ctx, (xP, yP), phi_po, field_b, family=2,
                               stop=stop, n_out=n_shock_out)
    sol.add_shock([0.0, xP], [-1.0, yP], [phi_po] * 2, [ctx.tau0] * 2,
                  [tau_po] * 2, "corner-shock-lower", "post-sonic")
    sol.add_shock(fit.x, fit.y, fit.phi,
                  [s.tau for s in fit.up], [s.tau for s in fit.down],
                  "refitted-shock", "post-sonic")
    sol.fitted_shock = fit

    # straight continuation beyond the fan with the constant upstream
    st1 = up.terminal_state
    E_xy = (fit.x[-1], fit.y[-1])
    sh_straight = solve_oblique_shock(ctx, st1, fit.down[-1].tau, family=2)
    G_xy = _wall_hit(E_xy, sh_straight.phi, params.theta_plus, 1.0)
    sol.add_shock([E_xy[0], G_xy[0]], [E_xy[1], G_xy[1]],
                  [sh_straight.phi] * 2, [st1.tau] * 2,
                  [sh_straight.down.tau] * 2, "straight-shock-upper",
                  sh_straight.sonic_class)

    # flow behind the refitted shock: singular Cauchy patch
    data = fit.downstream_data()
    cauchy = singular_cauchy_solve(ctx, data, n_r=params.n_lattice,
                                   n_s=params.n_lattice)
    sol.add_region("goursat-patch", _cauchy_edges(ctx, cauchy),
                   payload=cauchy)

    # central patch between the plus characteristic leaving P and the
    # cross-characteristic through the lower corner fan
    fan_d = _corner_fan(low)
    d_sys = RaySystem.from_fan(ctx, fan_d, (0.0, -1.0))
    chiP = np.hypot(xP - 0.0, yP + 1.0)
    minus_trace = d_sys.cross_trace((xP, yP), 0)
    plus_trace = cauchy.row_trace(cauchy.shape[0] - 1)
    central = goursat_solve(ctx, plus_trace, minus_trace,
                            params.n_lattice, params.n_lattice,
                            compat_tol=1e-6)
    sol.add_region("goursat-patch", _lattice_edges(ctx, central),
                   payload=central)
    _record_corner_regions(ctx, sol, low, (xP, yP), minus_trace, params)

    class _Poly:
        x = fit.x
        y = fit.y
    _record_corner_regions(ctx, sol, up, (xP, yP), _Poly, params)
    _record_wall_constants(ctx, sol, low, None, minus_trace, None, params)
    E_now = (fit.x[-1], fit.y[-1])
    sol.add_region("constant", [
        _edge_const((0.0, 1.0), E_now, st1),
        _edge_const(E_now, G_xy, st1),
        _edge_const(G_xy, (0.0, 1.0), st1),
    ], payload=st1)

    # lower transmitted wave and its reflection
    exit_lo = central.row_trace(central.shape[0] - 1)
    st_F = state_from_rs(ctx, float(exit_lo.varying.min()),
                         exit_lo.const_invariant)
    F_xy = exit_lo.point_at(exit_lo.varying.min())
    H_xy = _wall_hit(F_xy, st_F.beta, params.theta_minus, -1.0)
    lenFH = np.hypot(H_xy[0] - F_xy[0], H_xy[1] - F_xy[1])
    lo_wave = simple_wave_solve(ctx, exit_lo, -1, lenFH,
                                n_cross=params.n_cross)
    sol.add_region("simple-wave", _patch_edges_simple(ctx, lo_wave),
                   payload=lo_wave)
    refl_lo = _reflect_and_record(ctx, sol, lo_wave, params.theta_minus,
                                  H_xy, "lower", params)

    # upper wall closure behind the straight shock: deflect the shocked
    # state to the wall direction through a centered wave at G
    st_d = sh_straight.down
    gap = st_d.sigma - params.theta_plus
    if gap < -1e-10:
        fan_g = integrate_fan(ctx, st_d, -1, stop_sigma=params.theta_plus)
        st_wall = fan_g.state_at_tau(fan_g.tau_end)
        R_arc = 0.8
        arc = _edge_fan_arc(ctx, fan_g, G_xy, lambda a: R_arc,
                            fan_g.angle_start, fan_g.angle_end, n=40)
        p0 = (G_xy[0] + R_arc * np.cos(fan_g.angle_start),
              G_xy[1] + R_arc * np.sin(fan_g.angle_start))
        p1 = (G_xy[0] + R_arc * np.cos(fan_g.angle_end),
              G_xy[1] + R_arc * np.sin(fan_g.angle_end))
        sol.add_region("centered-wave", [
            _edge_const(G_xy, p0, st_d), arc,
            _edge_const(p1, G_xy, st_wall),
        ], payload=fan_g)
        sol.wall_closure_upper = st_wall
    else:
        sol.wall_closure_upper = st_d
    sol.cycles_run = 1
    return sol


def run_duct(ctx, params):
    """Dispatch on the classified corner pair."""
    low = solve_ramp(ctx, params.theta_minus, "lower")
    up = solve_ramp(ctx, params.theta_plus, "upper")
    rec = classify_interaction(up, low)
    pair = (up.base_tag, low.base_tag)
    if pair == ("f", "f"):
        return run_fan_fan(ctx, params)
    if pair == ("sf", "sf"):
        return run_sf_sf(ctx, params)
    if pair == ("f", "sf"):
        return run_f_sf(ctx, params)
    raise PipelineError(
        f"no orchestrated pipeline for {rec['pair']} "
        f"(interaction {rec['interaction_index']}); use case_atlas")


def case_atlas(ctx, params):
    """Classify the corner pair and report which building blocks apply,
    without full orchestration."""
    low = solve_ramp(ctx, params.theta_minus, "lower")
    up = solve_ramp(ctx, params.theta_plus, "upper")
    rec = classify_interaction(up, low)
    blocks = {"goursat": True}
    tags = {up.base_tag, low.base_tag}
    if tags & {"sf", "fsf", "s", "fs"}:
        blocks["oblique-shocks"] = True
    if tags & {"sf", "fsf"}:
        blocks["hodograph-corner-jump"] = True
        blocks["post-sonic-fitting"] = True
        blocks["singular-cauchy"] = True
    if tags & {"fs", "fsf"}:
        blocks["transonic-fitting"] = True
    rec["building_blocks"] = sorted(blocks)
    rec["lower_corner"] = low.as_dict()
    rec["upper_corner"] = up.as_dict()
    return rec
