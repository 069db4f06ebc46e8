"""Shock-fitting ODE integrators through nonuniform upstream fields.

Post-sonic fitting: with the downstream volume slaved to the upstream
one through the sonic-matching map (tau_b = psi_po(tau_f), so the back
side stays exactly sonic), the inclination obeys a single ODE along the
shock arclength:

    dphi/dl = [ tau_f (N_f^2 - c_f^2) / (rho_f^2 N_f L_f (tau_f^2 - tau_b^2))
                - N_f cos^2(A_f) / (rho_f L_f) ] d_Gamma(rho_f)
              + d_Gamma(sigma_f),

where d_Gamma = cos(phi) d/dx + sin(phi) d/dy is the derivative along
the front, evaluated from the upstream field's gradients.  The mirrored
sign applies for 1-shocks.

Transonic fitting: the downstream is a simple wave of the reflected
family (its constant invariant closes the system), giving a coupled
(phi, rho_b) pair of ODEs; the back side's distance to sonic matching
is monitored and the integration hands over to post-sonic fitting when
tau_b reaches psi_po(tau_f).
"""

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from ..kinematics import state_from_uv
from ..shock import psi_po, liu_admissible, mass_flux_sq, ShockError

__all__ = ["FittedShock", "shock_fit_post_sonic", "shock_fit_transonic",
           "ShockFitError", "PsiPoTable"]


class ShockFitError(ValueError):
    pass


class PsiPoTable:
    """Cached post-sonic matching map with Newton polish.

    psi_po is called on every right-hand-side evaluation of the fitting
    ODE; the dense table plus one Newton step reproduces the rootfinder
    to ~1e-12 at a fraction of the cost."""

    def __init__(self, eos, n=400):
        lm = eos.landmarks()
        self.eos = eos
        self.lo = lm.tau1_e
        self.hi = lm.tau2_i
        tf = np.linspace(self.lo, self.hi * (1 - 1e-9), n)
        vals = np.array([psi_po(eos, t) for t in tf])
        self._interp = PchipInterpolator(tf, vals)

    def __call__(self, tau_f, newton_iters=2):
        t = float(np.clip(tau_f, self.lo, self.hi * (1 - 1e-12)))
        tb = float(self._interp(t))
        eos = self.eos
        for _ in range(newton_iters):
            f = eos.dp(tb) * (tb * tb - t * t) - (2 * eos.h(tb)
                                                  - 2 * eos.h(t))
            df = eos.ddp(tb) * (tb * tb - t * t)
            if abs(df) < 1e-300:
                break
            tb -= f / df
        return tb


class FittedShock:
    """Sampled shock front with both-side states along the polyline."""

    def __init__(self, ctx, family, xs, ys, phis, up_states, down_states,
                 stop_reason):
        self.ctx = ctx
        self.family = family
        self.x = np.asarray(xs)
        self.y = np.asarray(ys)
        self.phi = np.asarray(phis)
        self.up = up_states
        self.down = down_states
        self.stop_reason = stop_reason
        sgn = -1.0 if family == 1 else 1.0
        self.N_f = np.array([sgn * (st.u * np.sin(p) - st.v * np.cos(p))
                             for st, p in zip(up_states, self.phi)])
        self.N_b = np.array([sgn * (st.u * np.sin(p) - st.v * np.cos(p))
                             for st, p in zip(down_states, self.phi)])
        self.L = np.array([st.u * np.cos(p) + st.v * np.sin(p)
                           for st, p in zip(up_states, self.phi)])

    @property
    def n_points(self):
        return len(self.x)

    def rh_residual_max(self):
        eos = self.ctx.eos
        worst = 0.0
        for k in range(self.n_points):
            uf, db = self.up[k], self.down[k]
            m1 = abs(uf.rho * self.N_f[k] - db.rho * self.N_b[k])
            Lb = db.u * np.cos(self.phi[k]) + db.v * np.sin(self.phi[k])
            m2 = abs(self.L[k] - Lb)
            m3 = abs(self.N_f[k] ** 2 + 2 * eos.h(uf.tau)
                     - self.N_b[k] ** 2 - 2 * eos.h(db.tau))
            worst = max(worst, m1, m2, m3)
        return worst

    def liu_slack_min(self, n_samples=200):
        worst = np.inf
        for k in range(self.n_points):
            _, slack = liu_admissible(self.ctx.eos, self.up[k].tau,
                                      self.down[k].tau, n_samples)
            worst = min(worst, slack)
        return worst

    def back_sonic_residual_max(self):
        """max |N_b / c_b - 1| (zero for post-sonic fronts)."""
        cb = np.array([st.c for st in self.down])
        return float(np.max(np.abs(self.N_b / cb - 1.0)))

    def envelope_residual_max(self):
        """max |phi - alpha_back|: tangency to the downstream plus
        characteristics (mirrored for 1-shocks)."""
        if self.family == 2:
            ab = np.array([st.alpha for st in self.down])
        else:
            ab = np.array([st.beta for st in self.down])
        return float(np.max(np.abs(self.phi - ab)))

    def downstream_invariant_derivatives(self):
        """(d_Gamma r_b, d_Gamma s_b) along the polyline by differences."""
        r = np.array([st.r for st in self.down])
        s = np.array([st.s for st in self.down])
        dl = np.hypot(np.diff(self.x), np.diff(self.y))
        return np.diff(r) / dl, np.diff(s) / dl

    def downstream_data(self):
        from .hodograph import ShockBackData
        return ShockBackData(self.ctx, self.x, self.y,
                             [st.u for st in self.down],
                             [st.v for st in self.down])

    def as_table(self):
        rows = []
        for k in range(self.n_points):
            rows.append({
                "x": self.x[k], "y": self.y[k], "phi": self.phi[k],
                "tau_up": self.up[k].tau, "tau_down": self.down[k].tau,
                "N_f": self.N_f[k], "N_b": self.N_b[k],
            })
        return rows


def _downstream_state(ctx, family, phi, L, N_b):
    if family == 2:
        u = L * np.cos(phi) + N_b * np.sin(phi)
        v = L * np.sin(phi) - N_b * np.cos(phi)
    else:
        u = L * np.cos(phi) - N_b * np.sin(phi)
        v = L * np.sin(phi) + N_b * np.cos(phi)
    return state_from_uv(ctx, u, v)


def shock_fit_post_sonic(ctx, start_xy, phi0, upstream_field, family=2,
                         stop=None, max_length=20.0, rtol=1e-10,
                         n_out=80):
    """Integrate a post-sonic shock front through `upstream_field`.

    `stop` is an optional event callable stop(x, y, phi) whose zero
    crossing terminates the front (for example hitting a bounding
    characteristic).  Integration also stops when the upstream volume
    leaves the post-sonic domain (shock degenerates toward sonic) or the
    field is exhausted.  Returns a FittedShock sampled at n_out points.
    """
    eos = ctx.eos
    lm = eos.landmarks()
    psi = PsiPoTable(eos)
    sgn = -1.0 if family == 1 else 1.0

    def rhs(l, state):
        x, y, phi = state
        st = upstream_field.state_at(x, y)
        drx, dry, dsx, dsy = upstream_field.grads_at(x, y)
        cphi, sphi = np.cos(phi), np.sin(phi)
        d_rho = cphi * drx + sphi * dry
        d_sig = cphi * dsx + sphi * dsy
        N_f = sgn * (st.u * sphi - st.v * cphi)
        L_f = st.u * cphi + st.v * sphi
        tau_b = psi(st.tau)
        rho_f = 1.0 / st.tau
        coef = (st.tau * (N_f ** 2 - st.c ** 2)
                / (rho_f ** 2 * N_f * L_f * (st.tau ** 2 - tau_b ** 2))
                - N_f * np.cos(st.A) ** 2 / (rho_f * L_f))
        dphi = sgn * coef * d_rho + d_sig
        return [cphi, sphi, dphi]

    events = []

    def ev_degenerate(l, state):
        st = upstream_field.state_at(state[0], state[1])
        return st.tau - lm.tau2_i * (1 - 1e-9)
    ev_degenerate.terminal = True
    events.append(ev_degenerate)

    if stop is not None:
        def ev_stop(l, state):
            return stop(state[0], state[1], state[2])
        ev_stop.terminal = True
        events.append(ev_stop)

    def ev_domain(l, state):
        return 1.0 if upstream_field.contains(state[0], state[1]) else -1.0
    ev_domain.terminal = True
    events.append(ev_domain)

    sol = solve_ivp(rhs, (0.0, max_length), [start_xy[0], start_xy[1], phi0],
                    method="DOP853", rtol=rtol, atol=1e-12, events=events,
                    dense_output=True, max_step=max_length / 16)
    if not sol.success:
        raise ShockFitError(f"post-sonic fitting failed: {sol.message}")
    if sol.status == 1:
        hit = [k for k, te in enumerate(sol.t_events) if len(te)]
        l_end = min(sol.t_events[k][0] for k in hit)
        names = ("degenerate", "stop", "domain-exit") if stop is not None \
            else ("degenerate", "domain-exit")
        reason = names[min(hit, key=lambda k: sol.t_events[k][0])]
    else:
        l_end, reason = sol.t[-1], "max-length"
    ls = np.linspace(0.0, l_end, n_out)
    samples = sol.sol(ls)
    ups, downs = [], []
    for x, y, phi in samples.T:
        st = upstream_field.state_at(x, y)
        N_f = sgn * (st.u * np.sin(phi) - st.v * np.cos(phi))
        L_f = st.u * np.cos(phi) + st.v * np.sin(phi)
        tau_b = psi(st.tau)
        N_b = tau_b * N_f / st.tau
        ups.append(st)
        downs.append(_downstream_state(ctx, family, phi, L_f, N_b))
    return FittedShock(ctx, family, samples[0], samples[1], samples[2],
                       ups, downs, reason)


def shock_fit_transonic(ctx, start_xy, phi0, rho_b0, upstream_field,
                        family=2, stop=None, max_length=20.0, rtol=1e-10,
                        n_out=80, switch_to_post_sonic=True):
    """Integrate a transonic shock front with a simple-wave back side.

    The derivative of the back-side density along the front follows from
    eliminating the inclination derivative between the front- and
    back-side jump relations, with the simple-wave closure on the back
    (its reflected-family invariant is constant).  The integration
    terminates at `stop`, on field exhaustion, on an entropy-condition
    violation, or at the transition point where tau_b reaches
    psi_po(tau_f); from there, when `switch_to_post_sonic`, the front is
    continued as a post-sonic shock and the two pieces are returned
    together with the switch location.

    Only the 2-family is integrated directly; mirror the configuration
    for 1-shocks.
    """
    if family != 2:
        raise ShockFitError("transonic fitting is implemented for the "
                            "2-family; mirror the configuration instead")
    eos = ctx.eos
    psi = PsiPoTable(eos)
    sgn = 1.0

    def pieces(x, y, phi, rho_b):
        st = upstream_field.state_at(x, y)
        tau_b = 1.0 / rho_b
        cphi, sphi = np.cos(phi), np.sin(phi)
        N3 = sgn * (st.u * sphi - st.v * cphi)
        L3 = st.u * cphi + st.v * sphi
        m = st.rho * N3
        N = m * tau_b
        c_b = tau_b * np.sqrt(-eos.dp(tau_b))
        q_b2 = N * N + L3 * L3
        cosA_b2 = 1.0 - c_b * c_b / q_b2
        return st, tau_b, N3, L3, m, N, c_b, cosA_b2

    def rhs(l, state):
        x, y, phi, rho_b = state
        st, tau_b, N3, L3, m, N, c_b, cosA_b2 = pieces(x, y, phi, rho_b)
        drx, dry, dsx, dsy = upstream_field.grads_at(x, y)
        cphi, sphi = np.cos(phi), np.sin(phi)
        d_rho3 = cphi * drx + sphi * dry
        d_sig3 = cphi * dsx + sphi * dsy
        # characteristic projections of the upstream gradients
        s2A = np.sin(2.0 * st.A)
        t_plus = np.sin(phi - st.beta) / s2A
        t_minus = np.sin(st.alpha - phi) / s2A
        dp_rho = np.cos(st.alpha) * drx + np.sin(st.alpha) * dry
        dm_rho = np.cos(st.beta) * drx + np.sin(st.beta) * dry
        rho3 = st.rho
        sin2A_b = 2.0 * np.sqrt(max(cosA_b2, 1e-15)) * c_b / np.sqrt(
            N * N + L3 * L3)
        base3 = (st.tau * (N3 ** 2 - st.c ** 2)
                 / (rho3 * L3 * N3 * (st.tau + tau_b)))
        coefb = (tau_b * (N ** 2 - c_b ** 2)
                 / (rho_b * L3 * N * (st.tau + tau_b))
                 - N * cosA_b2 / (rho_b * L3)
                 - sin2A_b / (2.0 * rho_b))
        coef3_plus = base3 - N3 * np.cos(st.A) ** 2 / (rho3 * L3) \
            - s2A / (2.0 * rho3)
        coef3_minus = base3 - N3 * np.cos(st.A) ** 2 / (rho3 * L3) \
            + s2A / (2.0 * rho3)
        d_rho_b = (t_plus * coef3_plus * dp_rho
                   + t_minus * coef3_minus * dm_rho) / coefb
        # inclination from the front-side relation
        d_tau3 = -st.tau ** 2 * d_rho3
        d_tau_b = -tau_b ** 2 * d_rho_b
        two_m_dm = (2.0 * rho3 * (st.c ** 2 - N3 ** 2) * d_tau3
                    - 2.0 * rho_b * (c_b ** 2 - N ** 2) * d_tau_b) \
            / (st.tau ** 2 - tau_b ** 2)
        d_m = two_m_dm / (2.0 * m)
        dphi = (d_m / (rho3 * L3)
                - N3 * np.cos(st.A) ** 2 / (rho3 * L3) * d_rho3) + d_sig3
        return [cphi, sphi, dphi, d_rho_b]

    events = []

    def ev_transition(l, state):
        st = upstream_field.state_at(state[0], state[1])
        return 1.0 / state[3] - psi(st.tau)
    ev_transition.terminal = True
    events.append(ev_transition)

    # fan-type upstream fields end at an inflection volume where their
    # gradients diverge; stop cleanly before it
    lm = eos.landmarks()

    def ev_upstream_inflection(l, state):
        st = upstream_field.state_at(state[0], state[1])
        return lm.tau1_i * (1 - 1e-9) - st.tau
    ev_upstream_inflection.terminal = True
    events.append(ev_upstream_inflection)

    if stop is not None:
        def ev_stop(l, state):
            return stop(state[0], state[1], state[2])
        ev_stop.terminal = True
        events.append(ev_stop)

    def ev_domain(l, state):
        return 1.0 if upstream_field.contains(state[0], state[1]) else -1.0
    ev_domain.terminal = True
    events.append(ev_domain)

    sol = solve_ivp(rhs, (0.0, max_length),
                    [start_xy[0], start_xy[1], phi0, rho_b0],
                    method="DOP853", rtol=rtol, atol=1e-12, events=events,
                    dense_output=True, max_step=max_length / 16)
    if not sol.success:
        raise ShockFitError(f"transonic fitting failed: {sol.message}")
    hit = [k for k, te in enumerate(sol.t_events) if len(te)]
    if sol.status == 1 and hit:
        l_end = min(sol.t_events[k][0] for k in hit)
        names = ["transition", "upstream-inflection"] \
            + (["stop"] if stop is not None else []) + ["domain-exit"]
        reason = names[min(hit, key=lambda k: sol.t_events[k][0])]
    else:
        l_end, reason = sol.t[-1], "max-length"

    ls = np.linspace(0.0, l_end, n_out)
    samples = sol.sol(ls)
    ups, downs = [], []
    for x, y, phi, rho_b in samples.T:
        st = upstream_field.state_at(x, y)
        _, tau_b, N3, L3, m, N, c_b, _ = pieces(x, y, phi, rho_b)
        ups.append(st)
        downs.append(_downstream_state(ctx, family, phi, L3, N))
    front = FittedShock(ctx, family, samples[0], samples[1], samples[2],
                        ups, downs, reason)
    front.rho_b = samples[3]
    result = {"transonic": front, "switch_xy": None, "post_sonic": None,
              "reason": reason}
    if reason == "transition" and switch_to_post_sonic:
        x_s, y_s, phi_s, _ = samples.T[-1]
        result["switch_xy"] = (float(x_s), float(y_s))
        result["post_sonic"] = shock_fit_post_sonic(
            ctx, (x_s, y_s), float(phi_s), upstream_field, family=family,
            stop=stop, max_length=max_length, rtol=rtol, n_out=n_out)
    return result
