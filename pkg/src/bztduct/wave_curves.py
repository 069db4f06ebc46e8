"""Centered simple waves and composite rarefactive wave curves.

A centered fan of the plus family (straight plus-characteristics
through one point) satisfies, along the fan angle xi,

    q'(xi) cos A + q sigma'(xi) sin A = 0,
    q q'(xi) + tau p'(tau) tau'(xi) = 0,
    sigma + A = xi,

equivalently tau'(xi) = -2 q c cos A / (tau^2 p''): the fan cannot cross
an inflection volume (p'' -> 0).  The integration is performed with tau
as the independent variable, which turns the inflection contact into a
regular endpoint; stops in angle or flow direction are located by event
functions on the same integration.

The rarefactive 2-wave curve of an anchor state collects, depending on
where the anchor volume sits relative to the landmarks,

    tau_a >= tau2_i        : F
    tau1_i < tau_a < tau2_i: S + SF
    tau1_e < tau_a <= tau1_i: F + FS + S + SF
    tau_a <= tau1_e        : F + FS + FSF

with S the oblique-shock branch, SF a fan restarted behind the
post-sonic shock, FS pre-sonic shocks standing inside the leading fan,
and FSF a fan restarted behind the double-sonic shock.  All segments
are parametrized by the downstream specific volume, along which the
flow direction is strictly monotone (checked at build time).  The
1-wave curve is the mirror image (v -> -v).
"""

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .kinematics import FlowState, state_from_tau_sigma, VacuumReached
from .shock import (ShockError, psi_po, psi_pr, solve_oblique_shock,
                    post_sonic_corner_state)

__all__ = ["FanSolution", "WaveCurveSegment", "WaveCurve", "integrate_fan",
           "build_wave_curve", "intersect_wave_curves", "WaveCurveError",
           "InflectionContact"]


class WaveCurveError(ValueError):
    pass


class InflectionContact(WaveCurveError):
    """Fan integration reached an inflection volume (p'' -> 0)."""


class FanSolution:
    """Dense solution of a centered-fan integration.

    family=+1: straight plus-characteristics, fan angle xi = sigma + A,
    expansion turns the flow clockwise (d sigma / d tau < 0).
    family=-1: straight minus-characteristics, eta = sigma - A,
    expansion turns counterclockwise.
    """

    def __init__(self, ctx, family, taus, sigmas, qs, angles, dense=None):
        self.ctx = ctx
        self.family = family
        self.tau = taus
        self.sigma = sigmas
        self.q = qs
        self.angle = angles
        self.stopped_by = None
        self.tau_start, self.tau_end = taus[0], taus[-1]
        self._dense = dense  # high-order interpolant (angle, sigma, q)(tau)
        self.degenerate = abs(self.tau_end - self.tau_start) \
            < 1e-13 * self.tau_start
        if self.degenerate:
            self._sigma_of_tau = lambda t: sigmas[0]
            self._angle_of_tau = lambda t: angles[0]
            self._tau_of_angle = lambda a: taus[0]
        else:
            self._sigma_of_tau = PchipInterpolator(taus, sigmas)
            self._angle_of_tau = PchipInterpolator(taus, angles)
            order = np.argsort(angles)
            self._tau_of_angle = PchipInterpolator(angles[order], taus[order])

    @property
    def angle_start(self):
        return self.angle[0]

    @property
    def angle_end(self):
        return self.angle[-1]

    def tau_at_angle(self, ang):
        lo, hi = min(self.angle[0], self.angle[-1]), max(self.angle[0],
                                                         self.angle[-1])
        if not (lo - 1e-12 <= ang <= hi + 1e-12):
            raise WaveCurveError(f"angle {ang:.6g} outside fan range "
                                 f"[{lo:.6g}, {hi:.6g}]")
        t = float(self._tau_of_angle(np.clip(ang, lo, hi)))
        # Newton polish on sigma(tau) + family*A(tau) = ang
        for _ in range(3):
            st = self.state_at_tau(t)
            resid = st.sigma + self.family * st.A - ang
            t -= resid / self._dangle_dtau(st)
        return t

    def _dangle_dtau(self, st):
        eos = self.ctx.eos
        dd = eos.ddp(st.tau)
        return -self.family * st.tau ** 2 * dd / (
            2.0 * st.q * st.c * np.cos(st.A))

    def state_at_tau(self, tau):
        return state_from_tau_sigma(self.ctx, tau, self.sigma_at_tau(tau))

    def state_at_angle(self, ang):
        return self.state_at_tau(self.tau_at_angle(ang))

    def sigma_at_tau(self, tau):
        if self._dense is not None:
            lo, hi = sorted((self.tau_start, self.tau_end))
            return float(self._dense(np.clip(tau, lo, hi))[1])
        return float(self._sigma_of_tau(tau))

    def angle_at_tau(self, tau):
        if self._dense is not None:
            lo, hi = sorted((self.tau_start, self.tau_end))
            return float(self._dense(np.clip(tau, lo, hi))[0])
        return float(self._angle_of_tau(tau))

    def ode_residual(self, n_probe=50):
        """Residual of the fan equations in their angle form, evaluated
        by differentiating the dense solution against the right-hand
        sides at probe volumes."""
        ts = np.linspace(self.tau_start, self.tau_end, n_probe + 2)[1:-1]
        eos = self.ctx.eos
        worst = 0.0
        for t in ts:
            st = self.state_at_tau(t)
            dd = eos.ddp(t)
            dxi_dtau = self._dangle_dtau(st)
            # exact rhs of the angle-parametrized system
            q_rhs = self.family * 2 * st.c * eos.dp(t) * np.cos(st.A) / (t * dd)
            s_rhs = -self.family * 2 * eos.dp(t) * np.cos(st.A) ** 2 / (t * dd)
            dt = 1e-6 * (self.tau_end - self.tau_start)
            stp = self.state_at_tau(t + dt)
            stm = self.state_at_tau(t - dt)
            q_fd = (stp.q - stm.q) / (2 * dt) / dxi_dtau
            s_fd = (stp.sigma - stm.sigma) / (2 * dt) / dxi_dtau
            worst = max(worst, abs(q_fd - q_rhs) / max(1.0, abs(q_rhs)),
                        abs(s_fd - s_rhs) / max(1.0, abs(s_rhs)))
        return worst

    def angle_identity_residual(self):
        """max |sigma + family*A - angle| over the stored grid."""
        A = np.array([self.ctx.mach_angle(t) for t in self.tau])
        return float(np.max(np.abs(self.sigma + self.family * A
                                   - self.angle)))


def integrate_fan(ctx, start_state, family, stop_tau=None, stop_angle=None,
                  stop_sigma=None, rtol=1e-10, atol=1e-12, max_step_tau=None):
    """Integrate a centered fan away from `start_state`.

    The expansion proceeds toward larger specific volume; integration
    runs in tau with events on the requested stop (angle or flow
    direction), the nearest inflection volume and the vacuum cap.
    Raises InflectionContact if no stop intervenes before p'' -> 0, and
    VacuumReached if the expansion exhausts the tabulated band.
    """
    eos = ctx.eos
    st0 = start_state
    tau_a = st0.tau
    angle0 = st0.sigma + family * st0.A

    # nearest landmark above the start volume bounds the integration
    tau_limit = ctx.tau_cap * 0.999
    inflection_cap = None
    if eos.is_bzt:
        lm = eos.landmarks()
        for t_i in (lm.tau1_i, lm.tau2_i):
            if tau_a < t_i * (1 - 1e-12):
                inflection_cap = t_i
                tau_limit = min(tau_limit, t_i)
                break
    try:
        w_room = ctx.w_vac - ctx.w_of_tau(tau_a)
    except VacuumReached:
        raise VacuumReached("fan starts at the vacuum cap")
    if stop_tau is not None:
        if stop_tau < tau_a - 1e-13:
            raise WaveCurveError("fans only expand: stop_tau below start")
        tau_limit = min(tau_limit, stop_tau)

    def rhs(t, y):
        ang, sig, q = y
        c = ctx.c_of_tau(t)
        A = np.arcsin(min(1.0, c / q))
        dd = eos.ddp(t)
        d = eos.dp(t)
        dang = -family * t * t * dd / (2.0 * q * c * np.cos(A))
        dsig = -family * np.sqrt(-d) * np.cos(A) / q
        dq = -t * d / q
        return [dang, dsig, dq]

    events = []
    if stop_angle is not None:
        ev_a = lambda t, y: y[0] - stop_angle
        ev_a.terminal = True
        events.append(ev_a)
    if stop_sigma is not None:
        ev_s = lambda t, y: y[1] - stop_sigma
        ev_s.terminal = True
        events.append(ev_s)

    if tau_limit <= tau_a * (1 + 1e-14):
        taus = np.array([tau_a, tau_a * (1 + 1e-14)])
        fan = FanSolution(ctx, family, taus,
                          np.array([st0.sigma] * 2),
                          np.array([st0.q] * 2),
                          np.array([angle0] * 2))
        fan.stopped_by = "tau"
        return fan

    sol = solve_ivp(rhs, (tau_a, tau_limit), [angle0, st0.sigma, st0.q],
                    method="DOP853", rtol=rtol, atol=atol, events=events,
                    dense_output=True,
                    max_step=max_step_tau or (tau_limit - tau_a) / 8)
    if not sol.success:
        raise WaveCurveError(f"fan integration failed: {sol.message}")

    stopped_by_event = any(len(te) for te in sol.t_events)
    tau_end = sol.t[-1]
    if stopped_by_event:
        tau_end = min(te[0] for te in sol.t_events if len(te))
        stopped_by = "event"
    else:
        tau_requested = stop_tau is not None and \
            abs(tau_end - stop_tau) < 1e-9 * stop_tau
        at_inflection = inflection_cap is not None and \
            abs(tau_end - inflection_cap) < 1e-9 * inflection_cap
        if at_inflection and not tau_requested:
            raise InflectionContact(
                f"fan reached the inflection volume {inflection_cap:.8g} at "
                f"angle {sol.y[0, -1]:.8g} before the requested stop")
        stopped_by = "tau" if tau_requested else "cap"

    n = 400 if tau_end > 3.0 * tau_a else 120
    taus = np.geomspace(tau_a, tau_end, n)
    taus[0], taus[-1] = tau_a, tau_end
    ys = sol.sol(taus)
    fan = FanSolution(ctx, family, taus, ys[1], ys[2], ys[0], dense=sol.sol)
    fan.stopped_by = stopped_by
    return fan


class WaveCurveSegment:
    """One tagged piece of a wave curve, parametrized by downstream tau."""

    def __init__(self, tag, ctx, taus, sigmas, info=None):
        self.tag = tag
        self.ctx = ctx
        self.tau = np.asarray(taus, dtype=float)
        self.sigma = np.asarray(sigmas, dtype=float)
        self.info = info or {}
        if not np.all(np.diff(self.tau) > 0):
            raise WaveCurveError(f"segment {tag}: tau not increasing")
        self._sigma_of_tau = PchipInterpolator(self.tau, self.sigma)

    @property
    def tau_lo(self):
        return self.tau[0]

    @property
    def tau_hi(self):
        return self.tau[-1]

    def sigma_at(self, tau):
        return float(self._sigma_of_tau(tau))

    def sigma_exact(self, tau):
        """Direct constructor evaluation where available (join checks)."""
        fn = self.info.get("exact_sigma")
        return float(fn(tau)) if fn is not None else self.sigma_at(tau)

    def state_at(self, tau):
        return state_from_tau_sigma(self.ctx, float(tau), self.sigma_at(tau))

    def dsigma_dtau(self, taus=None):
        ts = self.tau if taus is None else np.asarray(taus)
        return self._sigma_of_tau.derivative()(ts)


class WaveCurve:
    """Composite rarefactive wave curve of an anchor state.

    family=2 turns the flow clockwise (lower corner), family=1
    counterclockwise; the curve is stored for family=2 and mirrored on
    evaluation for family=1.
    """

    def __init__(self, ctx, anchor, family, segments, truncated_at_vacuum):
        self.ctx = ctx
        self.anchor = anchor
        self.family = family
        self.segments = segments
        self.truncated_at_vacuum = truncated_at_vacuum

    @property
    def mirror_sign(self):
        return -1.0 if self.family == 1 else 1.0

    @property
    def tau_lo(self):
        return self.segments[0].tau_lo

    @property
    def tau_hi(self):
        return self.segments[-1].tau_hi

    def segment_at(self, tau):
        for seg in self.segments:
            if tau <= seg.tau_hi * (1 + 1e-14):
                return seg
        return self.segments[-1]

    def sigma_at(self, tau):
        return self.mirror_sign * self.segment_at(tau).sigma_exact(tau)

    def state_at(self, tau):
        seg = self.segment_at(tau)
        st = state_from_tau_sigma(self.ctx, float(tau), seg.sigma_exact(tau))
        if self.family == 1:
            return st.mirrored()
        return st

    def tau_for_sigma(self, sigma_target):
        """Invert the monotone direction parametrization.

        Returns None when the target lies beyond the curve range
        (vacuum side)."""
        g = lambda t: self.sigma_at(t) - sigma_target
        lo, hi = self.tau_lo, self.tau_hi
        g_lo, g_hi = g(lo), g(hi)
        if g_lo == 0.0:
            return lo
        if np.sign(g_lo) == np.sign(g_hi):
            return None
        return brentq(g, lo, hi, xtol=1e-13)

    def join_report(self):
        """Position and tangent mismatches at the segment joins."""
        def edge_slope(seg, at_end, e):
            # one-sided derivative and curvature taken from the interior
            if at_end:
                t0 = seg.tau_hi
                s0 = seg.sigma_exact(t0)
                s1 = seg.sigma_exact(t0 - 0.5 * e)
                s2 = seg.sigma_exact(t0 - e)
                slope = (3 * s0 - 4 * s1 + s2) / e
            else:
                t0 = seg.tau_lo
                s0 = seg.sigma_exact(t0)
                s1 = seg.sigma_exact(t0 + 0.5 * e)
                s2 = seg.sigma_exact(t0 + e)
                slope = (-3 * s0 + 4 * s1 - s2) / e
            curv = (s0 - 2 * s1 + s2) / (0.25 * e * e)
            return slope, curv, t0, s0

        out = []
        for a, b in zip(self.segments[:-1], self.segments[1:]):
            # degenerate-end guards leave a tiny hole between segment
            # domains; compare the quadratic extensions across it
            e = 1e-4 * a.tau_hi
            da, ca, ta, sa = edge_slope(a, True, e)
            db, cb, tb, sb = edge_slope(b, False, e)
            gap = abs(sa + da * (tb - ta) + 0.5 * ca * (tb - ta) ** 2 - sb)
            slope_a_at_b = da + ca * (tb - ta)
            out.append({"tags": (a.tag, b.tag), "tau": 0.5 * (ta + tb),
                        "sigma_gap": gap,
                        "slope_gap": abs(slope_a_at_b - db)})
        return out

    def monotonicity_margin(self):
        """min of -d sigma/d tau over all segments (family-2 convention);
        positive means strictly decreasing direction along the curve."""
        worst = np.inf
        for seg in self.segments:
            interior = seg.tau[1:-1] if len(seg.tau) > 2 else seg.tau
            worst = min(worst, float(np.min(-seg.dsigma_dtau(interior))))
        return worst


def _fan_segment(ctx, fan, tag):
    return WaveCurveSegment(tag, ctx, fan.tau, fan.sigma,
                            info={"fan": fan,
                                  "exact_sigma": fan.sigma_at_tau})


def _shock_branch_segment(ctx, up, tau_lo, tau_hi, n=240, tag="S"):
    """Oblique-shock branch with fixed upstream state, parametrized by
    the downstream volume."""
    taus = np.linspace(tau_lo, tau_hi, n)
    sigmas = []
    phis = []
    for t in taus:
        sh = solve_oblique_shock(ctx, up, t, family=2, check_liu=False)
        sigmas.append(sh.down.sigma)
        phis.append(sh.phi)

    def exact_sigma(t):
        return solve_oblique_shock(ctx, up, float(t), family=2,
                                   check_liu=False).down.sigma

    return WaveCurveSegment(tag, ctx, taus, np.array(sigmas),
                            info={"up": up, "phi": np.array(phis),
                                  "exact_sigma": exact_sigma})


def _pre_sonic_fan_shock_segment(ctx, fan, tf_lo, tf_hi, n=240):
    """Pre-sonic shocks standing inside the leading fan: the shock ray
    coincides with the fan ray of its upstream state; parametrized by the
    downstream volume psi_pr(tau_front), which decreases in tau_front."""
    eos = ctx.eos
    tfs = np.linspace(tf_lo, tf_hi, n)
    taud = []
    sig = []
    phis = []
    for tf in tfs:
        td = psi_pr(eos, tf)
        st = fan.state_at_tau(tf)
        phi = st.sigma + st.A  # fan ray angle = shock inclination
        Ns = td * st.c / tf
        Ls = np.sqrt(st.q ** 2 - st.c ** 2)
        us = Ns * np.sin(phi) + Ls * np.cos(phi)
        vs = -Ns * np.cos(phi) + Ls * np.sin(phi)
        taud.append(td)
        sig.append(np.arctan2(vs, us))
        phis.append(phi)
    taud = np.array(taud)
    sig = np.array(sig)
    phis = np.array(phis)
    order = np.argsort(taud)

    def exact_sigma(td):
        td = float(np.clip(td, taud.min(), taud.max()))
        tf = brentq(lambda t: psi_pr(eos, t) - td, tf_lo, tf_hi,
                    xtol=1e-14)
        st = fan.state_at_tau(tf)
        phi = st.sigma + st.A
        Ns = float(td) * st.c / tf
        Ls = np.sqrt(st.q ** 2 - st.c ** 2)
        us = Ns * np.sin(phi) + Ls * np.cos(phi)
        vs = -Ns * np.cos(phi) + Ls * np.sin(phi)
        return np.arctan2(vs, us)

    return WaveCurveSegment("FS", ctx, taud[order], sig[order],
                            info={"fan": fan, "tau_front": tfs[order],
                                  "phi": phis[order],
                                  "exact_sigma": exact_sigma})


def build_wave_curve(ctx, anchor=None, family=2, n_branch=240):
    """Assemble the rarefactive wave curve of `anchor` (default: inlet).

    The segment sequence follows the anchor volume's position among the
    landmark volumes; joins are first-order contacts by construction of
    the sonic-matched shocks.  The final fan is truncated at the vacuum
    cap of the context and flagged.
    """
    if anchor is None:
        anchor = state_from_tau_sigma(ctx, ctx.tau0, 0.0)
    work = anchor.mirrored() if family == 1 else anchor
    eos = ctx.eos
    lm = eos.landmarks() if eos.is_bzt else None
    segments = []
    truncated = True

    def terminal_fan(from_state, tag):
        fan = integrate_fan(ctx, from_state, +1)
        return _fan_segment(ctx, fan, tag)

    if lm is None or work.tau >= lm.tau2_i * (1 - 1e-12):
        segments.append(terminal_fan(work, "F"))
    elif work.tau > lm.tau1_i:
        # S + SF
        tau_po = psi_po(eos, work.tau)
        segments.append(_shock_branch_segment(
            ctx, work, work.tau * (1 + 1e-9), tau_po, n_branch))
        sh = solve_oblique_shock(ctx, work, tau_po, family=2)
        segments.append(terminal_fan(sh.down, "SF"))
    elif work.tau > lm.tau1_e:
        # F + FS + S + SF
        lead = integrate_fan(ctx, work, +1, stop_tau=lm.tau1_i)
        segments.append(_fan_segment(ctx, lead, "F"))
        segments.append(_pre_sonic_fan_shock_segment(
            ctx, lead, work.tau * (1 + 1e-9), lm.tau1_i * (1 - 1e-9),
            n_branch))
        tau_pr = psi_pr(eos, work.tau)
        tau_po = psi_po(eos, work.tau)
        segments.append(_shock_branch_segment(
            ctx, work, tau_pr, tau_po, n_branch))
        sh = solve_oblique_shock(ctx, work, tau_po, family=2)
        segments.append(terminal_fan(sh.down, "SF"))
    else:
        # F + FS + FSF
        lead = integrate_fan(ctx, work, +1, stop_tau=lm.tau1_i)
        segments.append(_fan_segment(ctx, lead, "F"))
        segments.append(_pre_sonic_fan_shock_segment(
            ctx, lead, lm.tau1_e * (1 + 1e-12), lm.tau1_i * (1 - 1e-9),
            n_branch))
        # double-sonic shock standing at the fan ray of tau1_e
        st_e = lead.state_at_tau(lm.tau1_e)
        sh = solve_oblique_shock(ctx, st_e, lm.tau2_e, family=2)
        segments.append(terminal_fan(sh.down, "FSF"))

    # drop zero-length segments and order
    segments = [s for s in segments if s.tau_hi > s.tau_lo * (1 + 1e-13)]
    curve = WaveCurve(ctx, anchor, family, segments, truncated)
    margin = curve.monotonicity_margin()
    if margin <= 0:
        raise WaveCurveError(
            "flow direction is not strictly monotone along the wave curve "
            f"(margin {margin:.3e}); the anchor speed is too small for the "
            "monotonicity hypotheses")
    return curve


def intersect_wave_curves(w1, w2):
    """Intersection state of a 1-curve and a 2-curve on one manifold.

    Both parametrizations are monotone in the flow direction, so the
    matched state solves sigma_1(tau) = sigma_2(tau) by bracketed
    bisection; when the direction gap does not close before the vacuum
    caps the curves meet only at the limit circle and None is returned
    (vacuum wedge between them).
    """
    if {w1.family, w2.family} != {1, 2}:
        raise WaveCurveError("need one curve of each family")
    one = w1 if w1.family == 1 else w2
    two = w2 if w1.family == 1 else w1
    lo = max(one.tau_lo, two.tau_lo)
    hi = min(one.tau_hi, two.tau_hi)
    g = lambda t: one.sigma_at(t) - two.sigma_at(t)
    g_lo = g(lo)
    if abs(g_lo) < 1e-14:
        return one.state_at(lo)
    if np.sign(g_lo) == np.sign(g(hi)):
        return None
    t_star = brentq(g, lo, hi, xtol=1e-13)
    return one.state_at(t_star)
