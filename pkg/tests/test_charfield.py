"""Characteristic-lattice solvers, hodograph duals and shock fitting."""

import numpy as np
import pytest

from bztduct.kinematics import (state_from_rs, state_from_tau_sigma,
                                state_from_uv, VacuumReached)
from bztduct.corner import solve_ramp
from bztduct.shock import post_sonic_corner_state, psi_pr
from bztduct.wave_curves import integrate_fan
from bztduct.charfield import (CharTrace, goursat_solve,
                               wall_reflection_solve, cross_characteristic,
                               hodograph_goursat_solve, singular_cauchy_solve,
                               CavitationWedge, ShockBackData,
                               envelope_blowup_ratio, shock_fit_post_sonic,
                               shock_fit_transonic, ConstantField,
                               CenteredFanField, LatticeField, LatticeError)
from bztduct.charfield.lattice import simple_wave_solve


def _fan_fan_traces(ctx, theta, n=None):
    """Cross-characteristic boundary pair of the central interaction
    region for a symmetric pair of corner fans."""
    low = solve_ramp(ctx, -theta, "lower")
    fan_d = [s for s in low.sectors if s.kind == "fan"][0].fan
    # the two leading rays meet on the axis
    xi0 = fan_d.angle_start
    xP = 1.0 / np.tan(xi0)
    minus_trace, _ = cross_characteristic(ctx, fan_d, (0.0, -1.0), -1,
                                          chi0=1.0 / np.sin(xi0))
    # mirror to get the plus-family trace across the upper fan
    plus_trace = minus_trace.mirrored()
    return plus_trace, minus_trace, (xP, 0.0)


def test_cross_characteristic_geometry(ctx_fan):
    theta = 0.18
    plus_trace, minus_trace, P = _fan_fan_traces(ctx_fan, theta)
    # starts at P on the axis
    s0 = minus_trace.varying.max()
    x0, y0 = minus_trace.point_at(s0)
    assert abs(x0 - P[0]) < 1e-9 and abs(y0 - P[1]) < 1e-9
    # carries r = 0 (inlet invariant) across the lower fan
    assert abs(minus_trace.const_invariant) < 1e-12
    # ends on the terminal ray with sigma = -theta
    st_end, st_start = minus_trace.endpoint_states()
    ends = sorted([st_end.sigma, st_start.sigma])
    assert abs(ends[0] + theta) < 1e-9


def test_goursat_constant_corner_compat(ctx_fan):
    plus_trace, minus_trace, P = _fan_fan_traces(ctx_fan, 0.18)
    # shifting one boundary breaks the shared-corner requirement
    bad = CharTrace(+1, plus_trace.x + 0.1, plus_trace.y,
                    plus_trace.varying, plus_trace.const_invariant, ctx_fan)
    with pytest.raises(LatticeError):
        goursat_solve(ctx_fan, bad, minus_trace)


def test_goursat_symmetric_fan_fan(ctx_fan):
    plus_trace, minus_trace, P = _fan_fan_traces(ctx_fan, 0.18)
    lat = goursat_solve(ctx_fan, plus_trace, minus_trace, 30, 30)
    # mirror symmetry: lattice maps to itself under (y, v) -> (-y, -v)
    assert np.max(np.abs(lat.X - lat.X.T)) < 1e-9
    assert np.max(np.abs(lat.Y + lat.Y.T)) < 1e-9
    # invariant drift through the scalar path
    dr, ds = lat.invariant_drift()
    assert dr < 1e-7 and ds < 1e-7
    assert lat.bernoulli_residual() < 1e-8
    assert lat.slope_consistency() < 5e-3


def test_goursat_vacuum_guard(poly):
    # oversized invariant span (r_E - s_F = 4 theta >= 2 R_cal) must
    # refuse to close
    from bztduct.kinematics import BernoulliContext
    ctx = BernoulliContext(poly, 3.0 * np.sqrt(1.4), 1.0)
    theta = 0.55 * ctx.R_cal
    low = solve_ramp(ctx, -theta, "lower")
    fan_d = [s for s in low.sectors if s.kind == "fan"][0].fan
    xi0 = fan_d.angle_start
    minus_trace, _ = cross_characteristic(ctx, fan_d, (0.0, -1.0), -1,
                                          chi0=1.0 / np.sin(xi0))
    plus_trace = minus_trace.mirrored()
    with pytest.raises(VacuumReached):
        goursat_solve(ctx, plus_trace, minus_trace, 12, 12)


def test_goursat_convergence_order(ctx_fan):
    """Positions at matched probes converge at second order."""
    plus_trace, minus_trace, P = _fan_fan_traces(ctx_fan, 0.18)
    sols = {}
    for n in (10, 20, 40):
        sols[n] = goursat_solve(ctx_fan, plus_trace, minus_trace, n, n)
    # compare the opposite-corner node (same invariants in all three)
    p = {n: (sols[n].X[-1, -1], sols[n].Y[-1, -1]) for n in sols}
    e1 = np.hypot(p[10][0] - p[40][0], p[10][1] - p[40][1])
    e2 = np.hypot(p[20][0] - p[40][0], p[20][1] - p[40][1])
    order = np.log2(e1 / e2) if e2 > 0 else np.inf
    assert order > 1.8, (e1, e2, order)


def test_simple_wave_patch(ctx_fan):
    plus_trace, minus_trace, P = _fan_fan_traces(ctx_fan, 0.18)
    lat = goursat_solve(ctx_fan, plus_trace, minus_trace, 24, 24)
    exit_trace = lat.col_trace(lat.shape[1] - 1)
    patch = simple_wave_solve(ctx_fan, exit_trace, +1, 0.8, n_cross=8)
    assert patch.straightness_residual() < 1e-7
    patch2 = simple_wave_solve(ctx_fan, exit_trace, +1, 0.8, n_cross=16)
    assert patch2.straightness_residual() < 1e-7


def _synthetic_plus_trace(ctx, s_const, r_lo, r_hi, foot_xy, n=16):
    """A plus-characteristic curve with linearly varying r, marched from
    the foot with trapezoidal slopes."""
    rr = np.linspace(r_lo, r_hi, n)
    xs = np.full(n, float(foot_xy[0]))
    ys = np.full(n, float(foot_xy[1]))
    for k in range(1, n):
        a0 = state_from_rs(ctx, rr[k - 1], s_const).alpha
        a1 = state_from_rs(ctx, rr[k], s_const).alpha
        t = np.tan(0.5 * (a0 + a1))
        xs[k] = xs[k - 1] + 0.03
        ys[k] = ys[k - 1] + t * 0.03
    return CharTrace(+1, xs, ys, rr, s_const, ctx)


def test_wall_reflection_aligned_foot(ctx_fan):
    """Incoming characteristic whose foot state already satisfies slip."""
    s_in = -0.3
    r_lo = -0.1
    theta_w = 0.5 * (r_lo + s_in)
    incoming = _synthetic_plus_trace(ctx_fan, s_in, r_lo, r_lo + 0.25,
                                     (1.0, 0.0))
    refl = wall_reflection_solve(ctx_fan, incoming, theta_w, (1.0, 0.0),
                                 n=20)
    assert not refl.foot_fan
    m = refl.mask
    wall_nodes = np.abs(refl.SIGMA - theta_w) < 1e-12
    slip = np.abs(refl.V - refl.U * np.tan(theta_w))
    assert np.max(slip[wall_nodes & m]) < 1e-9
    dr, ds = refl.invariant_drift()
    assert dr < 1e-7 and ds < 1e-7
    # wall nodes lie on the wall line
    xw = refl.X[wall_nodes & m]
    yw = refl.Y[wall_nodes & m]
    assert np.max(np.abs(yw - (0.0 + (xw - 1.0) * np.tan(theta_w)))) < 1e-9


def test_wall_reflection_foot_fan_and_vacuum(ctx_fan, ctx_poly):
    # mismatch: foot direction above wall angle inserts a centered wave
    st = state_from_rs(ctx_fan, 0.25, -0.05)
    n = 14
    rr = np.linspace(0.25, 0.45, n)
    xs = np.zeros(n)
    ys = np.zeros(n)
    xs[0], ys[0] = 1.0, 0.0
    for k in range(1, n):
        a = state_from_rs(ctx_fan, rr[k - 1], -0.05).alpha
        b = state_from_rs(ctx_fan, rr[k], -0.05).alpha
        t = np.tan(0.5 * (a + b))
        dxs = 0.03
        xs[k] = xs[k - 1] + dxs
        ys[k] = ys[k - 1] + t * dxs
    incoming = CharTrace(+1, xs, ys, rr, -0.05, ctx_fan)
    theta = st.sigma - 0.06
    refl = wall_reflection_solve(ctx_fan, incoming, theta, (1.0, 0.0), n=12)
    assert refl.foot_fan
    assert refl.vacuum_ray is None
    wall_nodes = np.abs(refl.SIGMA - theta) < 1e-12
    slip = np.abs(refl.V - refl.U * np.tan(theta))
    assert np.max(slip[wall_nodes & refl.mask]) < 1e-9

    # vacuum branch: wall angle below the reachable turning
    st_p = state_from_rs(ctx_poly, 0.3, 0.1)
    rr = np.linspace(0.3, 0.35, 6)
    xs = 1.0 + np.linspace(0, 0.1, 6)
    ys = np.zeros(6)
    for k in range(1, 6):
        a = state_from_rs(ctx_poly, rr[k - 1], 0.1).alpha
        b = state_from_rs(ctx_poly, rr[k], 0.1).alpha
        ys[k] = ys[k - 1] + np.tan(0.5 * (a + b)) * (xs[k] - xs[k - 1])
    inc_p = CharTrace(+1, xs, ys, rr, 0.1, ctx_poly)
    theta_v = 0.3 - ctx_poly.R_cal - 0.01  # r_P - R_cal - margin
    refl_v = wall_reflection_solve(ctx_poly, inc_p, theta_v, (1.0, 0.0),
                                   n=10)
    assert refl_v.vacuum_ray is not None
    assert abs(refl_v.vacuum_ray["angle"] - (0.3 - ctx_poly.R_cal)) < 1e-12


def test_hodograph_degenerate_matches_physical(ctx_fan):
    """Dual-solver oracle: the same smooth Goursat problem solved in the
    physical plane and through the invariant plane agrees at probes."""
    plus_trace, minus_trace, P = _fan_fan_traces(ctx_fan, 0.18)
    phys = goursat_solve(ctx_fan, plus_trace, minus_trace, 40, 40)
    hodo = hodograph_goursat_solve(ctx_fan, plus_trace, minus_trace, 40, 40)
    field = LatticeField(hodo)
    rng = np.random.default_rng(1)
    checked = 0
    worst = 0.0
    for _ in range(200):
        i = rng.integers(1, phys.shape[0] - 1)
        j = rng.integers(1, phys.shape[1] - 1)
        x, y = phys.X[i, j], phys.Y[i, j]
        if not field.contains(x, y):
            continue
        st = field.state_at(x, y)
        worst = max(worst, abs(st.u - phys.U[i, j]),
                    abs(st.v - phys.V[i, j]))
        checked += 1
        if checked >= 50:
            break
    assert checked >= 50
    assert worst < 1e-5, worst


def test_hodograph_jump_inserts_centered_waves(ctx_sf):
    """Discontinuous corner data: the corner column/row map to one
    physical point and the certificate holds."""
    # build two short characteristic traces with a corner jump
    r_m, s_m = 0.05, -0.42            # minus-side corner invariants
    r_p, s_p = 0.18, -0.29            # plus-side corner invariants
    P = (1.3, 0.0)

    def plus_data(n=16):
        rr = np.linspace(r_p, r_p + 0.3, n)
        xs = np.full(n, P[0])
        ys = np.full(n, P[1])
        for k in range(1, n):
            a0 = state_from_rs(ctx_sf, rr[k - 1], s_p).alpha
            a1 = state_from_rs(ctx_sf, rr[k], s_p).alpha
            t = np.tan(0.5 * (a0 + a1))
            xs[k] = xs[k - 1] + 0.02
            ys[k] = ys[k - 1] + t * 0.02
        return CharTrace(+1, xs, ys, rr, s_p, ctx_sf)

    def minus_data(n=16):
        ss = np.linspace(s_m, s_m - 0.3, n)
        xs = np.full(n, P[0])
        ys = np.full(n, P[1])
        for k in range(1, n):
            b0 = state_from_rs(ctx_sf, r_m, ss[k - 1]).beta
            b1 = state_from_rs(ctx_sf, r_m, ss[k]).beta
            t = np.tan(0.5 * (b0 + b1))
            xs[k] = xs[k - 1] + 0.02
            ys[k] = ys[k - 1] + t * 0.02
        return CharTrace(-1, xs, ys, ss, r_m, ctx_sf)

    lat = hodograph_goursat_solve(ctx_sf, plus_data(), minus_data(), 24, 24)
    i_c, j_c = lat.corner_index
    assert np.allclose(lat.X[:i_c + 1, j_c], P[0], atol=1e-12)
    assert np.allclose(lat.Y[i_c, :j_c + 1], P[1], atol=1e-12)
    assert lat.weak_discontinuities["r"] is not None
    assert lat.weak_discontinuities["s"] is not None
    dr, ds = lat.invariant_drift()
    assert dr < 1e-7 and ds < 1e-7


def test_hodograph_cavitation_branch(ctx_poly):
    R = ctx_poly.R_cal
    r_p, s_m = 1.05 * R, -1.05 * R

    def trace(fam, const, lo, hi):
        vv = np.linspace(lo, hi, 6)
        return CharTrace(fam, np.full(6, 2.0), np.full(6, 0.0), vv, const,
                         ctx_poly)

    res = hodograph_goursat_solve(
        ctx_poly,
        trace(+1, s_m + 0.1, r_p, r_p + 0.05),
        trace(-1, r_p - 0.1, s_m - 0.05, s_m))
    assert isinstance(res, CavitationWedge)
    lo, hi = sorted(res.vacuum_angles)
    assert abs(hi - (r_p - R)) < 1e-12
    assert abs(lo - (s_m + R)) < 1e-12


def test_singular_cauchy_rejects_constant_data(ctx_fan):
    st = state_from_rs(ctx_fan, 0.2, -0.2)
    xs = np.linspace(1.0, 2.0, 12)
    ys = np.tan(st.alpha) * (xs - xs[0])
    data = ShockBackData(ctx_fan, xs, ys, np.full(12, st.u),
                         np.full(12, st.v))
    with pytest.raises(LatticeError):
        singular_cauchy_solve(ctx_fan, data)


def _f_sf_fit(ctx, theta_plus, theta_minus, rtol=1e-10, n_out=80):
    """Post-sonic shock through the upper corner fan (fan-with-shock-fan
    interaction geometry)."""
    up = solve_ramp(ctx, theta_plus, "upper")
    assert up.base_tag == "f"
    inlet = state_from_tau_sigma(ctx, ctx.tau0, 0.0)
    fan_b = integrate_fan(ctx, inlet, -1, stop_sigma=theta_plus)
    field = CenteredFanField(fan_b, (0.0, 1.0))
    phi_po, u_po, v_po, tau_po = post_sonic_corner_state(ctx)
    # leading-ray intersection of the lower shock with the upper fan head
    eta_head = min(fan_b.angle_start, fan_b.angle_end)
    xP = 2.0 / (np.tan(phi_po) - np.tan(eta_head))
    yP = 1.0 + xP * np.tan(eta_head)
    eta_last = max(fan_b.angle_start, fan_b.angle_end)

    def stop(x, y, phi):
        return np.arctan2(y - 1.0, x) - eta_last

    fit = shock_fit_post_sonic(ctx, (xP, yP), phi_po, field, family=2,
                               stop=stop, rtol=rtol, n_out=n_out)
    return fit, field


def test_post_sonic_constant_upstream(ctx_sf):
    inlet = state_from_tau_sigma(ctx_sf, ctx_sf.tau0, 0.0)
    phi_po, _, _, _ = post_sonic_corner_state(ctx_sf)
    fit = shock_fit_post_sonic(ctx_sf, (1.0, -0.5), phi_po,
                               ConstantField(inlet), family=2,
                               max_length=1.5)
    assert np.ptp(fit.phi) < 1e-12                 # straight front
    assert fit.rh_residual_max() < 1e-10
    assert fit.back_sonic_residual_max() < 1e-9


def test_post_sonic_fit_through_fan(ctx_fsf):
    fit, field = _f_sf_fit(ctx_fsf, 0.008, -0.5)
    assert fit.stop_reason == "stop"
    assert fit.n_points > 10
    # jump conditions and back-side sonic matching hold pointwise
    assert fit.rh_residual_max() < 1e-7
    assert fit.back_sonic_residual_max() < 1e-6
    # envelope property: the front is tangent to the downstream
    # plus-characteristics
    assert fit.envelope_residual_max() < 1e-6
    # structural signs of the downstream invariants
    dr, ds = fit.downstream_invariant_derivatives()
    assert np.all(dr > 0) and np.all(ds > 0)
    # entropy condition along the whole front
    assert fit.liu_slack_min() > -1e-12


def test_singular_cauchy_accepts_shock_back_data(ctx_fsf):
    fit, field = _f_sf_fit(ctx_fsf, 0.008, -0.5, n_out=200)
    data = fit.downstream_data()
    assert data.tangency_residual() < 1e-6
    lat = singular_cauchy_solve(ctx_fsf, data, n_r=24, n_s=24)
    g = lat.char_gradients()
    m_int = lat.mask.copy()
    m_int[0, :] = False    # the data curve itself carries the blow-up
    vals_p = g["rho_plus"][m_int & np.isfinite(g["rho_plus"])]
    vals_m = g["rho_minus"][m_int & np.isfinite(g["rho_minus"])]
    assert np.all(vals_p < 1e-6)
    assert np.all(vals_m < 1e-6)
    ratios = envelope_blowup_ratio(ctx_fsf, data, n_r=16,
                                   levels=(16, 32, 64))
    assert ratios[-1] > ratios[0]
    assert ratios[-1] > 2.0


def test_transonic_fit_transitions(bzt, bzt_landmarks):
    from bztduct.kinematics import BernoulliContext
    lm = bzt_landmarks
    cmax = lm.tau2_i * np.sqrt(-bzt.dp(lm.tau2_i))
    # the pre-sonic partner approaches the upper double-sonic volume like
    # a square root, so the gap tau2_e - tau2 is small only for anchors
    # extremely close to tau1_e
    tau0 = lm.tau1_e + 2e-6
    ctx = BernoulliContext(bzt, 1.8 * cmax, tau0)
    assert lm.tau2_e - psi_pr(bzt, tau0) < 0.02
    # full upper corner fan (to the inflection) so the shock has room
    inlet0 = state_from_tau_sigma(ctx, ctx.tau0, 0.0)
    fan_b = integrate_fan(ctx, inlet0, -1, stop_tau=lm.tau1_i)
    field = CenteredFanField(fan_b, (0.0, 1.0))
    # pure pre-sonic lower shock sits on the inlet Mach ray
    inlet = state_from_tau_sigma(ctx, ctx.tau0, 0.0)
    tau2 = psi_pr(bzt, tau0)
    xi0 = inlet.alpha
    eta_head = min(fan_b.angle_start, fan_b.angle_end)
    xP = 2.0 / (np.tan(xi0) - np.tan(eta_head))
    yP = 1.0 + xP * np.tan(eta_head)
    res = shock_fit_transonic(ctx, (xP, yP), xi0, 1.0 / tau2, field,
                              stop=None, max_length=8.0)
    assert res["reason"] == "transition"
    assert res["switch_xy"] is not None
    front = res["transonic"]
    # downstream simple-wave closure: constant reflected invariant
    s_b = np.array([st.s for st in front.down])
    assert np.ptp(s_b) < 1e-6
    # pre-switch segment stays admissible
    assert front.liu_slack_min() > -1e-12
    assert front.rh_residual_max() < 1e-7
    # switch location converges under tolerance refinement
    locs = []
    for rtol in (1e-8, 1e-10, 1e-12):
        r = shock_fit_transonic(ctx, (xP, yP), xi0, 1.0 / tau2, field,
                                stop=None, max_length=8.0, rtol=rtol,
                                switch_to_post_sonic=False)
        locs.append(r["transonic"].x[-1])
    assert abs(locs[2] - locs[1]) <= abs(locs[1] - locs[0]) + 1e-12
    assert abs(locs[2] - locs[1]) < 1e-6
