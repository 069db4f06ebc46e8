"""Flow-state algebra under a fixed Bernoulli constant.

Every state of the steady potential flow lies on one Bernoulli manifold
q^2/2 + h(tau) = B, so a state is fully described by two coordinates:
(u, v), (q, sigma) or the Riemann invariants (r, s) with

    r = sigma + w(tau),   s = sigma - w(tau),
    w(tau) = integral_{u0}^{q} sqrt(q'^2 - c^2) / (q' c) dq'  (turning integral).

w is precomputed once per context as a monotone cumulative table in tau
(with Newton polish on the exact quadrature), as are the Bernoulli maps
tau <-> q.  All hot-path conversions run off these tables.

Angle conventions: sigma = flow direction, A = Mach angle = arcsin(c/q),
alpha = sigma + A and beta = sigma - A are the inclinations of the plus
and minus family characteristics; all angles in radians, sigma confined
to (-pi/2, pi/2) since u > 0 throughout the duct flows considered.
"""

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from ._quad import CumulativeGauss
from .eos import EosError

__all__ = [
    "KinematicsError", "SubsonicOrVacuum", "VacuumReached",
    "CharacteristicVertical", "BernoulliContext", "FlowState",
    "InvariantRegion", "CharCoefficients", "state_from_uv", "state_from_rs",
    "lambda_pm", "decomposition_residual",
]


class KinematicsError(ValueError):
    pass


class SubsonicOrVacuum(KinematicsError):
    """Speed outside the supersonic band (c(tau), q_inf)."""


class VacuumReached(KinematicsError):
    """Requested turning reaches or exceeds the vacuum half-width."""


class CharacteristicVertical(KinematicsError):
    """alpha or beta too close to pi/2 for a slope representation."""


class BernoulliContext:
    """Fixed-inlet Bernoulli manifold with cached state tables.

    Args:
        eos: EosModel (assumptions verified).
        u0: inlet speed (> c(tau0)).
        tau0: inlet specific volume.
        tau_cap: upper end of the state tables; states beyond it count as
            numerically at vacuum.  Default grows until the turning
            integral is within `vacuum_margin` of its limit or 1e6.
    """

    def __init__(self, eos, u0, tau0, tau_cap=1e6, vacuum_margin=1e-9,
                 n_panels=600, check_supersonic=True):
        self.eos = eos
        self.u0 = float(u0)
        self.tau0 = float(tau0)
        self.c0 = tau0 * np.sqrt(-eos.dp(tau0))
        if u0 <= self.c0:
            raise SubsonicOrVacuum(
                f"inlet is subsonic: u0={u0:.6g} <= c0={self.c0:.6g}")
        self.B = 0.5 * u0 * u0 + eos.h(tau0)

        # limit enthalpy: the cached enthalpy is anchored at infinity with
        # a reported gauge uncertainty, so h_inf = 0 up to that estimate.
        self.h_inf = 0.0
        self.h_inf_err = eos.h.anchor_err
        self.q_inf = np.sqrt(2.0 * (self.B - self.h_inf))

        def q_of(t):
            return np.sqrt(2.0 * (self.B - eos.h(t)))

        def c_of(t):
            return t * np.sqrt(-eos.dp(t))

        self.q_of_tau_exact = q_of
        self.c_of_tau = c_of

        def w_integrand(t):
            q = q_of(t)
            c = c_of(t)
            return np.sqrt(-eos.dp(t)) * np.sqrt(
                np.maximum(q * q - c * c, 0.0)) / (q * q)

        self._w_integrand = w_integrand
        self.tau_cap = float(tau_cap)
        self._w = CumulativeGauss(w_integrand, tau0, self.tau_cap, n_panels)
        self.w_cap = self._w.total
        self.vacuum_margin = vacuum_margin

        # total turning half-width to vacuum: table + power-law remainder
        C, gam = eos.h.tail_C, eos.h.tail_gamma
        remainder = (np.sqrt(C) * self.tau_cap ** (0.5 * (1.0 - gam))
                     * 2.0 / ((gam - 1.0) * self.q_inf))
        self.R_cal = self.w_cap + remainder
        # truncation estimate: relative tail-fit quality on the remainder
        self.R_cal_err = remainder * (10.0 / self.tau_cap ** 0.5 + 1e-9) \
            + 0.05 * remainder * abs(gam - eos.tail_gamma)
        # numerically-vacuum threshold on the turning integral
        self.w_vac = min(self.w_cap, self.R_cal * (1.0 - vacuum_margin))

        if check_supersonic:
            ts = np.geomspace(tau0, self.tau_cap, 4000)
            bad = q_of(ts) <= c_of(ts)
            if np.any(bad):
                raise SubsonicOrVacuum(
                    "supersonic precondition fails on the Bernoulli branch at "
                    f"tau={ts[bad][0]:.6g}: q={q_of(ts[bad][0]):.6g} <= "
                    f"c={c_of(ts[bad][0]):.6g}; increase u0")

        # forward/inverse maps as dense monotone interpolants
        grid = np.geomspace(tau0, self.tau_cap, 6000)
        qg = q_of(grid)
        wg = self._w(grid)
        cg = c_of(grid)
        self._q_interp = PchipInterpolator(grid, qg, extrapolate=False)
        self._w_interp = PchipInterpolator(grid, wg, extrapolate=False)
        self._c_interp = PchipInterpolator(grid, cg, extrapolate=False)
        self._tau_of_q = PchipInterpolator(qg, grid, extrapolate=False)
        self._tau_of_w = PchipInterpolator(wg, grid, extrapolate=False)
        self.q_cap = float(qg[-1])

    # -- scalar/vector maps --------------------------------------------------

    def q_of_tau(self, tau):
        return np.sqrt(2.0 * (self.B - self.eos.h(tau)))

    def w_of_tau(self, tau):
        """Turning integral from the inlet volume to tau (tau >= tau0)."""
        tau = np.asarray(tau, dtype=float)
        if np.any(tau > self.tau_cap):
            raise VacuumReached(
                f"tau={np.max(tau):.6g} beyond table cap {self.tau_cap:.6g}")
        return self._w(tau)

    def tau_of_q(self, q, newton_iters=2):
        """Invert q(tau) on the branch tau >= tau0."""
        q = np.asarray(q, dtype=float)
        if np.any(q < self.u0 * (1 - 1e-12)) or np.any(q >= self.q_inf):
            raise SubsonicOrVacuum(
                f"speed outside ({self.u0:.6g}, {self.q_inf:.6g})")
        knots = self._tau_of_q.x
        t = self._tau_of_q(np.clip(q, knots[0], knots[-1]))
        if np.any(~np.isfinite(t)):
            raise SubsonicOrVacuum("speed outside the tabulated branch")
        for _ in range(newton_iters):
            # f(t) = q(t)^2/2 + h(t) - B is 0 at the true inverse of q
            f = 0.5 * q * q + self.eos.h(t) - self.B
            t = t - f / (t * self.eos.dp(t))
        return t

    def tau_of_w(self, w, newton_iters=2):
        """Invert the turning integral; w in [0, R_cal)."""
        w = np.asarray(w, dtype=float)
        if np.any(w < -1e-12):
            raise KinematicsError("turning integral must be nonnegative")
        if np.any(w >= self.R_cal):
            raise VacuumReached(
                f"turning {np.max(w):.6g} >= vacuum half-width {self.R_cal:.6g}")
        if np.any(w > self.w_vac):
            raise VacuumReached(
                f"turning {np.max(w):.6g} beyond the numerically resolvable "
                f"band (w_vac={self.w_vac:.6g})")
        t = self._tau_of_w(np.clip(w, 0.0, self.w_cap))
        for _ in range(newton_iters):
            t = t - (self._w(t) - w) / self._w_integrand(t)
        return t

    def state_arrays_from_rs(self, r, s, fast=True):
        """Vectorized (u, v, tau) from Riemann invariants.

        With fast=True the inverse turning map and the speed map are read
        from the dense monotone interpolants (1e-10-level accuracy); the
        exact quadrature path is used otherwise.
        """
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        sigma = 0.5 * (r + s)
        w = 0.5 * (r - s)
        if fast:
            if np.any(w < -1e-12) or np.any(w > self.w_vac):
                raise VacuumReached("turning outside the tabulated band")
            tau = self._tau_of_w(np.clip(w, 0.0, self.w_cap))
            q = self._q_interp(tau)
        else:
            tau = self.tau_of_w(w)
            q = self.q_of_tau(tau)
        return q * np.cos(sigma), q * np.sin(sigma), tau

    def mach_angle(self, tau, fast=False):
        if fast:
            return np.arcsin(np.clip(self._c_interp(tau) / self._q_interp(tau),
                                     0.0, 1.0))
        return np.arcsin(np.clip(self.c_of_tau(tau) / self.q_of_tau(tau),
                                 0.0, 1.0))

    def char_angles(self, r, s, fast=True):
        """(alpha, beta) arrays for invariant pairs."""
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        w = 0.5 * (r - s)
        if fast:
            tau = self._tau_of_w(np.clip(w, 0.0, self.w_cap))
        else:
            tau = self.tau_of_w(w)
        A = self.mach_angle(tau, fast=fast)
        sigma = 0.5 * (r + s)
        return sigma + A, sigma - A


class FlowState:
    """Immutable supersonic state on a Bernoulli manifold."""

    __slots__ = ("ctx", "u", "v", "tau", "q", "c", "sigma", "A",
                 "alpha", "beta", "r", "s")

    def __init__(self, ctx, u, v, tau):
        self.ctx = ctx
        self.u = float(u)
        self.v = float(v)
        self.tau = float(tau)
        self.q = float(np.hypot(u, v))
        self.c = float(ctx.c_of_tau(self.tau))
        if not self.q > self.c:
            raise SubsonicOrVacuum(
                f"state not supersonic: q={self.q:.6g}, c={self.c:.6g}")
        self.sigma = float(np.arctan2(v, u))
        self.A = float(np.arcsin(min(1.0, self.c / self.q)))
        self.alpha = self.sigma + self.A
        self.beta = self.sigma - self.A
        w = float(ctx.w_of_tau(self.tau))
        self.r = self.sigma + w
        self.s = self.sigma - w

    @property
    def rho(self):
        return 1.0 / self.tau

    @property
    def w(self):
        return 0.5 * (self.r - self.s)

    def bernoulli_residual(self):
        return abs(0.5 * self.q * self.q + self.ctx.eos.h(self.tau)
                   - self.ctx.B)

    def mirrored(self):
        """Reflection across the x-axis: (u, v) -> (u, -v)."""
        return FlowState(self.ctx, self.u, -self.v, self.tau)

    def __repr__(self):
        return (f"FlowState(u={self.u:.9g}, v={self.v:.9g}, "
                f"tau={self.tau:.9g})")


def state_from_uv(ctx, u, v):
    """State from velocity components; tau solved from the Bernoulli law."""
    q = float(np.hypot(u, v))
    tau = float(ctx.tau_of_q(q))
    return FlowState(ctx, u, v, tau)


def state_from_tau_sigma(ctx, tau, sigma):
    """State from specific volume and flow direction."""
    q = float(ctx.q_of_tau(tau))
    return FlowState(ctx, q * np.cos(sigma), q * np.sin(sigma), float(tau))


def state_from_rs(ctx, r, s):
    """State from Riemann invariants; requires 0 <= (r - s)/2 < R_cal."""
    u, v, tau = ctx.state_arrays_from_rs(float(r), float(s), fast=False)
    return FlowState(ctx, float(u), float(v), float(tau))


class InvariantRegion:
    """Invariant rectangle in the (r, s) plane for a duct with flare
    angles theta_minus <= sigma <= theta_plus and turning below R_cal."""

    def __init__(self, theta_plus, theta_minus, R_cal):
        if not (theta_plus > theta_minus):
            raise KinematicsError("theta_plus must exceed theta_minus")
        self.theta_plus = theta_plus
        self.theta_minus = theta_minus
        self.R_cal = R_cal

    def contains(self, r, s, slack=1e-10):
        mid = 0.5 * (np.asarray(r) + np.asarray(s))
        half = 0.5 * (np.asarray(r) - np.asarray(s))
        return ((mid >= self.theta_minus - slack)
                & (mid <= self.theta_plus + slack)
                & (half >= -slack) & (half < self.R_cal))

    def mirrored(self):
        return InvariantRegion(-self.theta_minus, -self.theta_plus, self.R_cal)


class CharCoefficients:
    """Coefficients entering the characteristic decompositions.

    kappa  = -2 p' / (tau p'' + 2 p')
    varpi  = -(4 p' + tau p'') / (tau p'')
    Lambda = varpi - tan^2 A
    F_coef = 2 sin^2 A - 8 p' cos^4 A / (tau p'')
    H_coef = 2 sin^2 A - 4 p' cos^2 A cos(2A) / (tau p'')
    """

    def __init__(self, eos, tau, A):
        d = eos.dp(tau)
        dd = eos.ddp(tau)
        self.tau = tau
        self.A = A
        self.kappa = -2.0 * d / (tau * dd + 2.0 * d)
        self.varpi = -(4.0 * d + tau * dd) / (tau * dd)
        self.Lambda = self.varpi - np.tan(A) ** 2
        cA = np.cos(A)
        self.F_coef = 2.0 * np.sin(A) ** 2 - 8.0 * d * cA ** 4 / (tau * dd)
        self.H_coef = (2.0 * np.sin(A) ** 2
                       - 4.0 * d * cA ** 2 * np.cos(2.0 * A) / (tau * dd))


def lambda_pm(state, vertical_tol=1e-9):
    """Characteristic slopes (dy/dx) of the plus and minus family.

    Returns (tan alpha, tan beta).  The algebraic eigenvalue form
    (u v +/- c sqrt(q^2 - c^2)) / (u^2 - c^2) agrees with the angle form
    whenever u != c; the angle form is returned because it stays finite
    through u = c.  Raises CharacteristicVertical when either angle is
    within `vertical_tol` of +/- pi/2.
    """
    for ang in (state.alpha, state.beta):
        if abs(abs(ang) - 0.5 * np.pi) < vertical_tol:
            raise CharacteristicVertical(
                f"characteristic angle {ang:.12g} too close to vertical")
    return np.tan(state.alpha), np.tan(state.beta)


def lambda_pm_algebraic(state):
    """Eigenvalue form of the characteristic slopes (u^2 != c^2 only)."""
    u, v, c, q = state.u, state.v, state.c, state.q
    disc = np.sqrt(max(q * q - c * c, 0.0))
    den = u * u - c * c
    return ((u * v + c * disc) / den, (u * v - c * disc) / den)


def _rho_of(ctx, field, x, y):
    u, v = field(x, y)
    return 1.0 / float(ctx.tau_of_q(np.hypot(u, v)))


def decomposition_residual(ctx, field, x, y, h):
    """Residual pair of the second-order characteristic decomposition of
    the density on a local five-point stencil.

    `field(x, y) -> (u, v)` must be smooth near (x, y); the cross
    derivatives along the local characteristic directions are formed by
    nested central differences with step h, and compared against the
    quadratic source terms.    Returns (res_plus_minus, res_minus_plus);
    both are O(h^2) for smooth fields and O(1)-or-worse across shocks,
    so large values flag non-smooth data.
    """
    def directional(g, x0, y0, ang, step):
        dx, dy = np.cos(ang) * step, np.sin(ang) * step
        return (g(x0 + dx, y0 + dy) - g(x0 - dx, y0 - dy)) / (2.0 * step)

    def state_at(x0, y0):
        u, v = field(x0, y0)
        return state_from_uv(ctx, u, v)

    st = state_at(x, y)

    def d_minus_rho(x0, y0):
        s0 = state_at(x0, y0)
        return directional(lambda a, b: _rho_of(ctx, field, a, b),
                           x0, y0, s0.beta, h)

    def d_plus_rho(x0, y0):
        s0 = state_at(x0, y0)
        return directional(lambda a, b: _rho_of(ctx, field, a, b),
                           x0, y0, s0.alpha, h)

    dpm = directional(d_minus_rho, x, y, st.alpha, h)   # d+ d- rho
    dmp = directional(d_plus_rho, x, y, st.beta, h)     # d- d+ rho
    dm = d_minus_rho(x, y)
    dp = d_plus_rho(x, y)

    coef = CharCoefficients(ctx.eos, st.tau, st.A)
    pref = (st.tau ** 4 * ctx.eos.ddp(st.tau)
            / (4.0 * st.c ** 2 * np.cos(st.A) ** 2))
    rhs_pm = pref * (dm * dm + (coef.F_coef - 1.0) * dm * dp)
    rhs_mp = pref * (dp * dp + (coef.F_coef - 1.0) * dm * dp)
    return abs(dpm - rhs_pm), abs(dmp - rhs_mp)
