"""Oblique shock jump conditions, admissibility and sonic matching."""

import numpy as np
import pytest

from bztduct.kinematics import BernoulliContext, state_from_uv
from bztduct.shock import (InadmissiblePair, ShockError, mass_flux_sq,
                           liu_admissible, psi_po, psi_pr,
                           solve_oblique_shock, classify_sonic,
                           post_sonic_corner_state)


def test_mass_flux_acoustic_limit(bzt):
    tau_f = 1.3
    m2 = mass_flux_sq(bzt, tau_f, tau_f * (1 + 1e-6))
    assert abs(m2 - (-bzt.dp(tau_f))) < 1e-5 * abs(bzt.dp(tau_f))


def test_mass_flux_double_sonic(bzt, bzt_landmarks):
    lm = bzt_landmarks
    m2 = mass_flux_sq(bzt, lm.tau1_e, lm.tau2_e)
    assert abs(m2 - (-bzt.dp(lm.tau1_e))) < 1e-10
    assert abs(m2 - (-bzt.dp(lm.tau2_e))) < 1e-10


def test_mass_flux_swap_symmetry(bzt):
    assert abs(mass_flux_sq(bzt, 1.2, 2.9) - mass_flux_sq(bzt, 2.9, 1.2)) \
        < 1e-14


def test_liu_inside_concave_interval_always_admissible(bzt, bzt_landmarks):
    # rarefaction shocks are classical where p'' < 0: any pair inside the
    # concave interval passes with positive slack
    lm = bzt_landmarks
    ok, slack = liu_admissible(bzt, lm.tau1_i * 1.05, lm.tau2_i * 0.95)
    assert ok and slack > 0
    # conversely a pair on the outer convex branch must fail
    ok_convex, _ = liu_admissible(bzt, lm.tau2_a, lm.tau2_a * 3.0)
    assert not ok_convex


def test_liu_double_sonic_sonic_contact(bzt, bzt_landmarks):
    lm = bzt_landmarks
    ok, slack = liu_admissible(bzt, lm.tau1_e, lm.tau2_e)
    assert ok
    assert slack >= -1e-12
    assert slack < 1e-6  # grazing contact at the endpoints


def test_liu_rejects_beyond_post_sonic(bzt, bzt_landmarks):
    tau_f = 1.3
    tau_po = psi_po(bzt, tau_f)
    ok, _ = liu_admissible(bzt, tau_f, tau_po * 1.02)
    assert not ok
    # oracle: brute-force chord scan with a fine grid
    ts = np.linspace(tau_f, tau_po * 1.02, 20000)[1:-1]
    m2_shock = mass_flux_sq(bzt, tau_f, tau_po * 1.02)
    m2_mid = np.array([mass_flux_sq(bzt, tau_f, t) for t in ts[:: 50]])
    assert np.max(m2_mid) > m2_shock


def test_psi_po_limits_and_monotonicity(bzt, bzt_landmarks):
    lm = bzt_landmarks
    assert abs(psi_po(bzt, lm.tau1_e + 1e-11) - lm.tau2_e) < 1e-6
    assert abs(psi_po(bzt, lm.tau2_i * (1 - 1e-12)) - lm.tau2_i) < 1e-6
    tf = np.linspace(lm.tau1_e * (1 + 1e-9), lm.tau2_i * (1 - 1e-7), 200)
    vals = np.array([psi_po(bzt, t) for t in tf])
    assert np.all(np.diff(vals) < 0)
    assert np.all((vals > lm.tau2_i * (1 - 1e-12))
                  & (vals < lm.tau2_e * (1 + 1e-12)))


def test_psi_pr_limits_and_monotonicity(bzt, bzt_landmarks):
    lm = bzt_landmarks
    # square-root branch at the double-sonic end: approach like sqrt(dtau)
    for delta, tol in ((1e-7, 1e-1), (1e-9, 1e-2), (1e-11, 1e-3)):
        gap = lm.tau2_e - psi_pr(bzt, lm.tau1_e + delta)
        assert 0 <= gap < tol
    assert abs(psi_pr(bzt, lm.tau1_i * (1 - 1e-12)) - lm.tau1_i) < 1e-6
    tf = np.linspace(lm.tau1_e * (1 + 1e-9), lm.tau1_i * (1 - 1e-7), 200)
    vals = np.array([psi_pr(bzt, t) for t in tf])
    assert np.all(np.diff(vals) < 0)
    assert np.all((vals > lm.tau1_i * (1 - 1e-12))
                  & (vals < lm.tau2_e * (1 + 1e-12)))


def test_psi_po_against_dense_scan(bzt, bzt_landmarks):
    """Independent oracle: dense scan of the tangency condition refined
    by pure bisection."""
    lm = bzt_landmarks
    for tau_f in (1.0, 1.25, 1.55):
        def f(tb):
            return bzt.dp(tb) * (tb * tb - tau_f * tau_f) \
                - (2 * bzt.h(tb) - 2 * bzt.h(tau_f))
        ts = np.linspace(lm.tau2_i, lm.tau2_e, 4000)
        vals = np.array([f(t) for t in ts])
        idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0][0]
        lo, hi = ts[idx], ts[idx + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if np.sign(f(mid)) == np.sign(f(lo)):
                lo = mid
            else:
                hi = mid
        assert abs(psi_po(bzt, tau_f) - 0.5 * (lo + hi)) < 1e-8


def test_psi_po_tangency_residual(bzt, bzt_landmarks):
    lm = bzt_landmarks
    for tau_f in np.linspace(lm.tau1_e * 1.001, lm.tau2_i * 0.99, 25):
        tb = psi_po(bzt, tau_f)
        slope = (2 * bzt.h(tb) - 2 * bzt.h(tau_f)) / (tb ** 2 - tau_f ** 2)
        assert abs(bzt.dp(tb) - slope) < 1e-10


def test_solve_shock_acoustic_limit(ctx_sf):
    up = state_from_uv(ctx_sf, ctx_sf.u0, 0.0)
    sh2 = solve_oblique_shock(ctx_sf, up, up.tau * (1 + 1e-9), family=2,
                              check_liu=False)
    assert abs(sh2.phi - up.alpha) < 1e-4
    sh1 = solve_oblique_shock(ctx_sf, up, up.tau * (1 + 1e-9), family=1,
                              check_liu=False)
    assert abs(sh1.phi - up.beta) < 1e-4


def test_solve_shock_matches_closed_form_post_sonic(ctx_sf):
    phi_po, u_po, v_po, tau_po = post_sonic_corner_state(ctx_sf)
    up = state_from_uv(ctx_sf, ctx_sf.u0, 0.0)
    sh = solve_oblique_shock(ctx_sf, up, tau_po, family=2)
    assert abs(sh.phi - phi_po) < 1e-12
    assert abs(sh.down.u - u_po) < 1e-10
    assert abs(sh.down.v - v_po) < 1e-10
    assert sh.sonic_class == "post-sonic"


def test_solved_shocks_satisfy_rh_and_bounds(ctx_sf):
    rng = np.random.default_rng(9)
    up0 = state_from_uv(ctx_sf, ctx_sf.u0, 0.0)
    tau_po = psi_po(ctx_sf.eos, up0.tau)
    for _ in range(30):
        tau_b = rng.uniform(up0.tau * 1.001, tau_po)
        sh = solve_oblique_shock(ctx_sf, up0, tau_b, family=2)
        assert max(sh.rh_residuals()) < 1e-9
        assert sh.angle_bounds_ok()
        assert sh.down.bernoulli_residual() < 1e-9


def test_shock_family_mirror(ctx_sf):
    up = state_from_uv(ctx_sf, ctx_sf.u0, 0.3)
    tau_b = psi_po(ctx_sf.eos, up.tau)
    sh2 = solve_oblique_shock(ctx_sf, up, tau_b, family=2)
    up_m = up.mirrored()
    sh1 = solve_oblique_shock(ctx_sf, up_m, tau_b, family=1)
    assert abs(sh1.phi + sh2.phi) < 1e-12
    assert abs(sh1.down.u - sh2.down.u) < 1e-10
    assert abs(sh1.down.v + sh2.down.v) < 1e-10
    assert abs(sh1.N_f - sh2.N_f) < 1e-12
    assert abs(sh1.N_b - sh2.N_b) < 1e-12


def test_sonic_classification(bzt, bzt_landmarks):
    lm = bzt_landmarks
    cmax = lm.tau2_i * np.sqrt(-bzt.dp(lm.tau2_i))
    # double-sonic: inlet exactly at the lower double-sonic volume
    ctx_ds = BernoulliContext(bzt, 2.2 * cmax, lm.tau1_e)
    up = state_from_uv(ctx_ds, ctx_ds.u0, 0.0)
    sh = solve_oblique_shock(ctx_ds, up, lm.tau2_e, family=2)
    assert sh.sonic_class == "double-sonic"
    # pre-sonic: tau0 between the double-sonic and inflection volumes
    ctx_pr = BernoulliContext(bzt, 1.8 * cmax, 1.0)
    up = state_from_uv(ctx_pr, ctx_pr.u0, 0.0)
    sh = solve_oblique_shock(ctx_pr, up, psi_pr(bzt, 1.0), family=2)
    assert sh.sonic_class == "pre-sonic"
    # transonic: strictly between the sonic-matched volumes
    tau_mid = 0.5 * (psi_pr(bzt, 1.0) + psi_po(bzt, 1.0))
    sh = solve_oblique_shock(ctx_pr, up, tau_mid, family=2)
    assert sh.sonic_class == "transonic"
    assert sh.N_f > sh.up.c and sh.N_b < sh.down.c


def test_inadmissible_and_detached_errors(ctx_sf):
    up = state_from_uv(ctx_sf, ctx_sf.u0, 0.0)
    tau_po = psi_po(ctx_sf.eos, up.tau)
    with pytest.raises(InadmissiblePair):
        solve_oblique_shock(ctx_sf, up, tau_po * 1.05, family=2)
    with pytest.raises(ShockError):
        solve_oblique_shock(ctx_sf, up, up.tau * 0.9, family=2)
