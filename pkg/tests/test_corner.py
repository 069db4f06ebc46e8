"""Corner (ramp) Riemann solver: configurations, slip, mirrors."""

import numpy as np
import pytest

from bztduct.kinematics import BernoulliContext
from bztduct.corner import solve_ramp, classify_interaction, CornerError
from bztduct.wave_curves import build_wave_curve


@pytest.fixture(scope="session")
def ctx_poly3(poly):
    # Mach-3 polytropic inlet: full turning width below pi/2, so vacuum
    # corners are reachable
    c0 = np.sqrt(1.4)
    return BernoulliContext(poly, 3.0 * c0, 1.0)


def test_zero_deflection(ctx_fan):
    sol = solve_ramp(ctx_fan, 0.0, "lower")
    assert sol.config_tag == "f"
    assert all(s.kind == "constant" for s in sol.sectors)
    assert sol.slip_residual() < 1e-14


def test_configs_follow_wave_curve_segments(ctx_fan, ctx_sf, ctx_fsf, bzt):
    lm = bzt.landmarks()
    cmax = lm.tau2_i * np.sqrt(-bzt.dp(lm.tau2_i))
    ctx4 = BernoulliContext(bzt, 1.8 * cmax, 0.90)
    expected = {"F": "f", "S": "s", "SF": "sf", "FS": "fs", "FSF": "fsf"}
    for ctx in (ctx_fan, ctx_sf, ctx_fsf, ctx4):
        curve = build_wave_curve(ctx, family=2)
        for seg in curve.segments:
            tau_mid = np.sqrt(seg.tau_lo * seg.tau_hi)
            if tau_mid > ctx.tau0 * 40:
                tau_mid = seg.tau_lo * 2.0  # keep the probe moderate
            theta = curve.sigma_at(tau_mid)
            if theta <= -np.pi / 2 * 0.98:
                continue
            sol = solve_ramp(ctx, theta, "lower")
            assert sol.config_tag == expected[seg.tag], (
                ctx.tau0, seg.tag, theta, sol.config_tag)
            assert sol.slip_residual() < 1e-8
            assert abs(sol.terminal_state.tau - tau_mid) < 1e-6 * tau_mid


def test_vacuum_corner(ctx_poly3):
    assert ctx_poly3.R_cal < np.pi / 2
    theta = -(ctx_poly3.R_cal + 0.05)
    sol = solve_ramp(ctx_poly3, theta, "lower")
    assert sol.config_tag == "f-vac"
    assert sol.sectors[-1].kind == "vacuum"
    assert sol.vacuum_angle is not None
    # vacuum boundary angle approaches -R_cal within the table truncation
    truncation = ctx_poly3.R_cal - ctx_poly3.w_cap
    assert abs(sol.vacuum_angle + ctx_poly3.R_cal) < truncation + 0.02
    # non-vacuum for smaller opening
    sol2 = solve_ramp(ctx_poly3, -(ctx_poly3.R_cal - 0.2), "lower")
    assert sol2.config_tag == "f"


def test_sf_corner_structure(ctx_sf):
    from bztduct.shock import post_sonic_corner_state
    phi_po, u_po, v_po, tau_po = post_sonic_corner_state(ctx_sf)
    sigma_po = np.arctan2(v_po, u_po)
    sol = solve_ramp(ctx_sf, sigma_po - 0.05, "lower")
    assert sol.config_tag == "sf"
    sh = sol.shocks()[0].shock
    assert abs(sh.phi - phi_po) < 1e-10
    assert sh.sonic_class == "post-sonic"
    # fan starts exactly on the shock ray (downstream side is sonic)
    fan_sec = [s for s in sol.sectors if s.kind == "fan"][0]
    assert abs(fan_sec.angle_hi - phi_po) < 1e-9
    assert sol.slip_residual() < 1e-8


def test_fs_corner_structure(ctx_fsf):
    curve = build_wave_curve(ctx_fsf)
    fs = next(s for s in curve.segments if s.tag == "FS")
    theta = curve.sigma_at(np.sqrt(fs.tau_lo * fs.tau_hi))
    sol = solve_ramp(ctx_fsf, theta, "lower")
    assert sol.config_tag == "fs"
    kinds = [s.kind for s in sol.sectors]
    assert kinds == ["constant", "fan", "shock", "constant"]
    sh = sol.shocks()[0].shock
    # pre-sonic shock stands on the fan ray of its upstream state
    assert abs(sh.phi - sh.up.alpha) < 1e-9
    assert sh.sonic_class == "pre-sonic"


def test_fsf_corner_structure(bzt):
    lm = bzt.landmarks()
    cmax = lm.tau2_i * np.sqrt(-bzt.dp(lm.tau2_i))
    ctx4 = BernoulliContext(bzt, 1.8 * cmax, 0.90)
    curve = build_wave_curve(ctx4)
    fsf = next(s for s in curve.segments if s.tag == "FSF")
    theta = curve.sigma_at(fsf.tau_lo * 1.5)
    sol = solve_ramp(ctx4, theta, "lower")
    assert sol.config_tag == "fsf"
    kinds = [s.kind for s in sol.sectors]
    assert kinds == ["constant", "fan", "shock", "fan", "constant"]
    sh = sol.shocks()[0].shock
    assert sh.sonic_class == "double-sonic"
    assert sol.slip_residual() < 1e-8


def test_mirror_property(ctx_sf):
    theta = -0.35
    low = solve_ramp(ctx_sf, theta, "lower")
    up = solve_ramp(ctx_sf, -theta, "upper")
    assert up.config_tag == low.config_tag
    for ang in np.linspace(-0.3, 0.4, 15):
        sl = low.state_at_angle(ang)
        su = up.state_at_angle(-ang)
        assert abs(sl.u - su.u) < 1e-10
        assert abs(sl.v + su.v) < 1e-10
    assert abs(up.terminal_state.v - (-low.terminal_state.v)) < 1e-12


def test_strength_vanishes_with_deflection(ctx_fan, ctx_sf):
    for ctx in (ctx_fan, ctx_sf):
        gaps = []
        for theta in (-0.08, -0.04, -0.02, -0.01):
            sol = solve_ramp(ctx, theta, "lower")
            gaps.append(abs(sol.terminal_state.q - ctx.u0))
        assert all(np.diff(gaps) < 0)
        # strength is asymptotically linear in the deflection
        assert gaps[-1] < 0.2 * gaps[0]


def test_angle_guards(ctx_fan):
    with pytest.raises(CornerError):
        solve_ramp(ctx_fan, 0.2, "lower")
    with pytest.raises(CornerError):
        solve_ramp(ctx_fan, -0.2, "upper")


def test_classification_pairs(ctx_fan, ctx_sf, ctx_fsf):
    up = solve_ramp(ctx_fan, 0.15, "upper")
    low = solve_ramp(ctx_fan, -0.15, "lower")
    rec = classify_interaction(up, low)
    assert rec["pair"] == "fxf" and rec["interaction_index"] == 1
    assert rec["orchestrated"]

    up = solve_ramp(ctx_sf, 0.35, "upper")
    low = solve_ramp(ctx_sf, -0.4, "lower")
    rec = classify_interaction(up, low)
    assert rec["pair"] == "sfxsf" and rec["interaction_index"] == 2
    assert rec["orchestrated"]

    up = solve_ramp(ctx_fsf, 0.008, "upper")
    low = solve_ramp(ctx_fsf, -0.5, "lower")
    rec = classify_interaction(up, low)
    assert rec["pair"] == "fxsf" and rec["interaction_index"] == 6
    assert rec["orchestrated"]

    up = solve_ramp(ctx_sf, 0.1, "upper")   # s
    low = solve_ramp(ctx_sf, -0.4, "lower")  # sf
    rec = classify_interaction(up, low)
    assert rec["pair"] == "sxsf" and rec["interaction_index"] == 3
    assert not rec["orchestrated"]
