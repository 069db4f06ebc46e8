"""Flow-state algebra: Bernoulli closure, invariants, characteristic
slopes and the characteristic-decomposition diagnostic."""

import numpy as np
import pytest

from bztduct.kinematics import (BernoulliContext, InvariantRegion,
                                SubsonicOrVacuum, VacuumReached,
                                state_from_uv, state_from_rs,
                                state_from_tau_sigma, lambda_pm,
                                lambda_pm_algebraic, decomposition_residual)
from bztduct._quad import CumulativeGauss


def test_inlet_anchor_state(ctx_fan):
    st = state_from_uv(ctx_fan, ctx_fan.u0, 0.0)
    assert st.sigma == 0.0
    assert abs(st.r) < 1e-12 and abs(st.s) < 1e-12
    assert abs(st.A - np.arcsin(ctx_fan.c0 / ctx_fan.u0)) < 1e-12
    anchor = state_from_rs(ctx_fan, 0.0, 0.0)
    assert abs(anchor.u - ctx_fan.u0) < 1e-10 and abs(anchor.v) < 1e-14


def test_mach_angle_at_double_sound_speed(ctx_fan):
    # pick tau where q = 2c by bisection, then A = pi/6
    ts = np.geomspace(ctx_fan.tau0, 100.0, 20000)
    ratio = ctx_fan.q_of_tau(ts) / ctx_fan.c_of_tau(ts)
    i = np.argmin(np.abs(ratio - 2.0))
    st = state_from_tau_sigma(ctx_fan, ts[i], 0.1)
    assert abs(st.A - np.pi / 6) < 1e-3  # grid-limited
    assert abs(np.sin(st.A) - st.c / st.q) < 1e-14


def test_round_trip_uv_rs(ctx_fan):
    rng = np.random.default_rng(42)
    for _ in range(100):
        r = rng.uniform(0.0, 0.8)
        s = r - rng.uniform(0.0, 1.4)
        st = state_from_rs(ctx_fan, r, s)
        back = state_from_uv(ctx_fan, st.u, st.v)
        assert abs(back.r - r) < 1e-10
        assert abs(back.s - s) < 1e-10
        assert st.bernoulli_residual() < 1e-9


def test_rs_identities(ctx_fan):
    rng = np.random.default_rng(3)
    for _ in range(50):
        r = rng.uniform(-0.3, 0.9)
        s = r - rng.uniform(0.0, 1.2)
        st = state_from_rs(ctx_fan, r, s)
        assert abs((st.r + st.s) - 2 * st.sigma) < 1e-12
        assert abs(st.alpha - st.beta - 2 * st.A) < 1e-14
        assert 0 < st.A < np.pi / 2


def test_reflection_symmetry(ctx_fan):
    st = state_from_rs(ctx_fan, 0.4, -0.1)
    mr = st.mirrored()
    assert abs(mr.r + st.s) < 1e-12
    assert abs(mr.s + st.r) < 1e-12
    assert abs(mr.v + st.v) < 1e-14


def test_turning_monotone_to_vacuum(ctx_fan):
    # tau increases monotonically with the turning half-width
    ws = np.linspace(0.0, ctx_fan.w_vac * 0.999, 300)
    taus = ctx_fan.tau_of_w(ws)
    assert np.all(np.diff(taus) > 0)
    with pytest.raises(VacuumReached):
        ctx_fan.tau_of_w(ctx_fan.R_cal)


def test_subsonic_and_vacuum_guards(ctx_fan):
    with pytest.raises(SubsonicOrVacuum):
        state_from_uv(ctx_fan, ctx_fan.c0 * 0.5, 0.0)
    with pytest.raises(SubsonicOrVacuum):
        state_from_uv(ctx_fan, ctx_fan.q_inf * 1.01, 0.0)


def test_turning_table_against_step_doubling(ctx_fan):
    # step-doubled cumulative quadrature of the turning integrand
    w2 = CumulativeGauss(ctx_fan._w_integrand, ctx_fan.tau0,
                         ctx_fan.tau_cap, 1200)
    probes = np.geomspace(ctx_fan.tau0 * 1.01, ctx_fan.tau_cap * 0.99, 40)
    assert np.max(np.abs(ctx_fan._w(probes) - w2(probes))) < 1e-9


def test_lambda_identities(ctx_fan):
    rng = np.random.default_rng(7)
    for _ in range(1000):
        r = rng.uniform(-0.2, 0.9)
        s = r - rng.uniform(0.001, 1.3)
        st = state_from_rs(ctx_fan, r, s)
        lp, lm = lambda_pm(st)
        # algebraic identity: product of slopes
        prod = (st.v ** 2 - st.c ** 2) / (st.u ** 2 - st.c ** 2)
        assert abs(lp * lm - prod) < 1e-9 * max(1.0, abs(prod))
        la, lb = lambda_pm_algebraic(st)
        assert abs(lp - la) < 1e-12 * max(1.0, abs(la))
        assert abs(lm - lb) < 1e-12 * max(1.0, abs(lb))


def test_invariant_gradients_match_finite_differences(ctx_fan):
    # dr/du = cos(alpha)/c, dr/dv = sin(alpha)/c,
    # ds/du = -cos(beta)/c, ds/dv = -sin(beta)/c
    rng = np.random.default_rng(11)
    for _ in range(20):
        st = state_from_rs(ctx_fan, rng.uniform(0, 0.5),
                           -rng.uniform(0, 0.5))
        eps = 1e-6 * st.q
        r_u = (state_from_uv(ctx_fan, st.u + eps, st.v).r
               - state_from_uv(ctx_fan, st.u - eps, st.v).r) / (2 * eps)
        r_v = (state_from_uv(ctx_fan, st.u, st.v + eps).r
               - state_from_uv(ctx_fan, st.u, st.v - eps).r) / (2 * eps)
        s_u = (state_from_uv(ctx_fan, st.u + eps, st.v).s
               - state_from_uv(ctx_fan, st.u - eps, st.v).s) / (2 * eps)
        s_v = (state_from_uv(ctx_fan, st.u, st.v + eps).s
               - state_from_uv(ctx_fan, st.u, st.v - eps).s) / (2 * eps)
        assert abs(r_u - np.cos(st.alpha) / st.c) < 1e-6
        assert abs(r_v - np.sin(st.alpha) / st.c) < 1e-6
        assert abs(s_u + np.cos(st.beta) / st.c) < 1e-6
        assert abs(s_v + np.sin(st.beta) / st.c) < 1e-6


def test_invariant_region_mirror(ctx_fan):
    region = InvariantRegion(0.3, -0.2, ctx_fan.R_cal)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-0.5, 0.7, size=(200, 2))
    r, s = pts[:, 0], np.minimum(pts[:, 1], pts[:, 0])
    inside = region.contains(r, s)
    mirrored = region.mirrored().contains(-s, -r)
    assert np.array_equal(inside, mirrored)


def _planar_simple_wave_field(ctx):
    """Simple wave with straight plus-family characteristics through a
    line of centers on x = 0: state constant along rays y = tan(a(k)) x + k.
    Implicit construction: given (x, y) solve for the parameter k."""
    from scipy.optimize import brentq

    def state_of_k(k):
        # r is constant across a plus-family simple wave; s varies
        return state_from_rs(ctx, 0.0, -0.25 - 0.1 * np.tanh(2.0 * k))

    def field(x, y):
        def eq(k):
            return y - k - np.tan(state_of_k(k).alpha) * x
        k = brentq(eq, -6.0, 6.0, xtol=1e-14)
        st = state_of_k(k)
        return st.u, st.v
    return field


def test_decomposition_residual_constant_state(ctx_fan):
    st = state_from_rs(ctx_fan, 0.2, -0.3)
    res = decomposition_residual(ctx_fan, lambda x, y: (st.u, st.v),
                                 0.5, 0.1, 1e-3)
    assert max(res) < 1e-10


def test_decomposition_residual_simple_wave_converges(ctx_fan):
    field = _planar_simple_wave_field(ctx_fan)
    hs = np.array([4e-3, 2e-3, 1e-3])
    rs = np.array([max(decomposition_residual(ctx_fan, field, 0.8, 0.05, h))
                   for h in hs])
    order = np.polyfit(np.log(hs), np.log(rs + 1e-300), 1)[0]
    assert order > 1.5, (rs, order)


def test_decomposition_residual_flags_shock(ctx_fan):
    left = state_from_rs(ctx_fan, 0.0, 0.0)
    right = state_from_rs(ctx_fan, 0.0, -0.6)

    def field(x, y):
        st = left if y > 0.3 * x else right
        return st.u, st.v

    res1 = max(decomposition_residual(ctx_fan, field, 1.0, 0.3, 2e-3))
    res2 = max(decomposition_residual(ctx_fan, field, 1.0, 0.3, 1e-3))
    assert res1 > 1.0 or res2 > 1.0
    assert res2 > 0.2 * res1  # no h^2 decay across a jump
