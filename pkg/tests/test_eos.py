"""Equation-of-state construction, assumption checks and landmarks."""

import numpy as np
import pytest

from bztduct.eos import (AssumptionError, LandmarkNotFound, make_vdw_like,
                         make_polytropic, find_landmarks, sound_speed,
                         fundamental_derivative, chord_slope,
                         DEFAULT_VDW_PARAMS)

# closed-form enthalpy of the default law, used only as an independent
# oracle here (the production path integrates tau p' numerically):
# h(t) = K g/(g-1) (t-b)^(1-g) + K b (t-b)^(-g) - 2 a / t


def _h_closed(prm, t):
    K, g, a, b = prm["K"], prm["gamma"], prm["a"], prm["b"]
    return K * g / (g - 1) * (t - b) ** (1 - g) + K * b * (t - b) ** (-g) \
        - 2 * a / t


def _gauss_integral(f, lo, hi, n_panels=64, order=40):
    """Composite high-order Gauss-Legendre quadrature (independent of the
    cached panel tables used in production)."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = mid[:, None] + half[:, None] * nodes[None, :]
    return float(((f(pts) * weights[None, :]).sum(axis=1) * half).sum())


def test_polytropic_rejected_as_bzt():
    # gamma-law has p'' > 0 everywhere, so the BZT constructor must refuse
    with pytest.raises(AssumptionError):
        make_vdw_like({"a": 0.0})
    poly = make_polytropic(1.4)
    assert poly.is_bzt is False
    with pytest.raises(LandmarkNotFound):
        find_landmarks(poly)


def test_sign_scan_confirms_single_concave_interval(bzt, bzt_landmarks):
    # brute-force oracle: p'' sign pattern on 10^4 grid points
    ts = np.geomspace(bzt.tau_min, 1e3, 10_000)
    sgn = np.sign(bzt.ddp(ts))
    flips = np.nonzero(np.diff(sgn) != 0)[0]
    assert len(flips) == 2
    lm = bzt_landmarks
    assert ts[flips[0]] <= lm.tau1_i <= ts[flips[0] + 1]
    assert ts[flips[1]] <= lm.tau2_i <= ts[flips[1] + 1]
    mid = np.sqrt(lm.tau1_i * lm.tau2_i)
    assert bzt.ddp(mid) < 0


def test_bad_parameters_report_sign_pattern():
    # two-loop laws (vdW pressure loop) must be rejected with a report
    with pytest.raises(AssumptionError) as err:
        make_vdw_like({"K": 2.0})  # p' > 0 inside the loop
    assert "p'" in str(err.value)


def test_enthalpy_against_independent_quadrature(bzt):
    pairs = [(0.6, 1.1), (1.1, 2.7), (0.5, 9.0), (3.0, 40.0)]
    for t1, t2 in pairs:
        dh = bzt.h(t2) - bzt.h(t1)
        oracle = _gauss_integral(lambda t: t * bzt.dp(t), t1, t2)
        assert abs(dh - oracle) < 1e-10, (t1, t2, dh - oracle)


def test_enthalpy_against_closed_form(bzt):
    prm = DEFAULT_VDW_PARAMS
    for t1, t2 in [(0.55, 1.3), (1.0, 6.0), (2.0, 500.0)]:
        dh = bzt.h(t2) - bzt.h(t1)
        exact = _h_closed(prm, t2) - _h_closed(prm, t1)
        assert abs(dh - exact) < 1e-11


def test_enthalpy_derivative_identity(bzt):
    taus = np.geomspace(0.55, 200.0, 60)
    assert bzt.enthalpy_residual(taus) < 1e-8


def test_landmark_ordering_chain(bzt_landmarks):
    lm = bzt_landmarks
    assert lm.ordered()
    assert 0 < lm.tau1_a < lm.tau1_e < lm.tau1_i < lm.tau2_i \
        < lm.tau2_e < lm.tau2_a


def test_auxiliary_volumes_level_match(bzt, bzt_landmarks):
    lm = bzt_landmarks
    assert abs(bzt.dp(lm.tau1_a) - bzt.dp(lm.tau2_i)) < 1e-10
    assert abs(bzt.dp(lm.tau1_i) - bzt.dp(lm.tau2_a)) < 1e-10


def test_double_sonic_pair_conditions(bzt, bzt_landmarks):
    lm = bzt_landmarks
    t1e, t2e = lm.tau1_e, lm.tau2_e
    slope = chord_slope(bzt, t1e, t2e)
    assert abs(bzt.dp(t1e) - slope) < 1e-10
    assert abs(bzt.dp(t2e) - slope) < 1e-10
    # strict chord inequality at interior samples
    ts = np.linspace(t1e, t2e, 1002)[1:-1]
    lhs = -slope
    rhs = -(2 * bzt.h(t1e) - 2 * bzt.h(ts)) / (t1e ** 2 - ts ** 2)
    assert np.all(lhs > rhs)


def test_double_sonic_pair_against_bisection_scan(bzt, bzt_landmarks):
    """Independent 2D oracle: dense scan + pure bisection, closed-form
    enthalpy, no shared root-finding code with the production path."""
    prm = DEFAULT_VDW_PARAMS
    lm = bzt_landmarks
    dp = bzt.dp

    def upper_partner(x, lo, hi, iters=60):
        # p'(y) = p'(x) on the increasing outer branch, by pure bisection
        target = dp(x)
        for _ in range(iters):
            midp = 0.5 * (lo + hi)
            if dp(midp) < target:
                lo = midp
            else:
                hi = midp
        return 0.5 * (lo + hi)

    def gap(x):
        y = upper_partner(x, lm.tau2_i * (1 + 1e-12), 50.0)
        return dp(x) * (x * x - y * y) - 2 * (_h_closed(prm, x)
                                              - _h_closed(prm, y))

    xs = np.linspace(lm.tau1_a * (1 + 1e-9), lm.tau1_i * (1 - 1e-9), 2000)
    vals = np.array([gap(x) for x in xs])
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    assert len(idx) == 1
    lo, hi = xs[idx[0]], xs[idx[0] + 1]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if np.sign(gap(mid)) == np.sign(gap(lo)):
            lo = mid
        else:
            hi = mid
    t1e_oracle = 0.5 * (lo + hi)
    t2e_oracle = upper_partner(t1e_oracle, lm.tau2_i * (1 + 1e-12), 50.0)
    assert abs(t1e_oracle - lm.tau1_e) < 1e-8
    assert abs(t2e_oracle - lm.tau2_e) < 1e-8


def test_sound_speed_and_fundamental_derivative(bzt, bzt_landmarks, poly):
    # polytropic gamma = 1.4 at tau = 1: c = sqrt(gamma)
    assert abs(sound_speed(poly, 1.0) - np.sqrt(1.4)) < 1e-14
    # polytropic law: G = (gamma + 1)/2 at any volume
    ts = np.geomspace(0.2, 50.0, 100)
    assert np.allclose(fundamental_derivative(poly, ts), 1.2, atol=1e-12)
    # BZT law: G < 0 exactly on the concave interval
    lm = bzt_landmarks
    inside = np.linspace(lm.tau1_i * 1.001, lm.tau2_i * 0.999, 50)
    outside = np.concatenate([np.linspace(0.55, lm.tau1_i * 0.999, 25),
                              np.linspace(lm.tau2_i * 1.001, 30, 25)])
    assert np.all(fundamental_derivative(bzt, inside) < 0)
    assert np.all(fundamental_derivative(bzt, outside) > 0)


def test_tail_decay_estimate(bzt, poly):
    assert abs(bzt.tail_gamma - bzt.params["gamma"]) < 0.01
    assert abs(poly.tail_gamma - 1.4) < 0.01
