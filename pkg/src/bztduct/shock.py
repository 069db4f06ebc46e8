"""Oblique shock algebra for nonconvex media.

Only rarefaction shocks (tau_front < tau_back, i.e. the gas expands
through the discontinuity) are solved for; they are admissible exactly
when the Liu extended entropy condition holds, which for a barotropic
law reduces to a chord inequality on the mass-flux functional

    m^2(a, b) = -(2 h(a) - 2 h(b)) / (a^2 - b^2).

Sonic matching: the normal relative speed on either side equals the
local sound speed iff m^2 equals -p' at that side's volume.  psi_po and
psi_pr return the unique downstream volume making the back / front side
sonic; both exist on landmark-bounded domains and decrease in tau_front.

Family and angle conventions for a shock with inclination phi:
    1-shock (upper corner family): N = -u sin(phi) + v cos(phi),
    2-shock (lower corner family): N =  u sin(phi) - v cos(phi),
    L = u cos(phi) + v sin(phi) for both.
"""

import numpy as np
from scipy.optimize import brentq

from .kinematics import FlowState, state_from_uv

__all__ = [
    "ShockError", "InadmissiblePair", "DetachedShock", "ObliqueShock",
    "mass_flux_sq", "liu_admissible", "psi_po", "psi_pr",
    "solve_oblique_shock", "classify_sonic", "post_sonic_corner_state",
]

SONIC_CLASSES = ("double-sonic", "post-sonic", "pre-sonic", "transonic")


class ShockError(ValueError):
    pass


class InadmissiblePair(ShockError):
    """Volume pair fails the entropy condition or has m^2 <= 0."""


class DetachedShock(ShockError):
    """No attached oblique solution: sine argument above one."""


def mass_flux_sq(eos, tau_f, tau_b):
    """Squared mass flux of a shock joining the two volumes."""
    tau_f = np.asarray(tau_f, dtype=float)
    tau_b = np.asarray(tau_b, dtype=float)
    m2 = -(2.0 * eos.h(tau_f) - 2.0 * eos.h(tau_b)) / (tau_f ** 2 - tau_b ** 2)
    if np.any(m2 <= 0):
        raise InadmissiblePair(
            f"nonpositive mass flux for volumes ({tau_f}, {tau_b})")
    return m2


def liu_admissible(eos, tau_f, tau_b, n_samples=1000, slack_tol=-1e-12):
    """Chord criterion for a rarefaction shock between tau_f < tau_b.

    The shock chord must lie weakly above every interior chord:
    m^2(tau_f, tau_b) >= m^2(tau_f, tau) for tau in between.  Returns
    (admissible, worst_slack); slacks down to `slack_tol` pass as sonic
    contact (the sonic-matched pairs sit exactly on the equality set).
    """
    if not tau_f < tau_b:
        raise ShockError("rarefaction shocks require tau_f < tau_b")
    m2 = mass_flux_sq(eos, tau_f, tau_b)
    ts = np.linspace(tau_f, tau_b, n_samples + 2)[1:-1]
    m2_mid = -(2.0 * eos.h(tau_f) - 2.0 * eos.h(ts)) / (tau_f ** 2 - ts ** 2)
    slack = float(np.min(m2 - m2_mid))
    return slack >= slack_tol, slack


def _partner_brackets(eos, tau_f):
    """Volumes on the concave and outer-convex branch with p' = p'(tau_f)."""
    lm = eos.landmarks()
    level = eos.dp(tau_f)
    m1 = brentq(lambda t: eos.dp(t) - level, lm.tau1_i * (1 + 1e-13),
                lm.tau2_i * (1 - 1e-13), xtol=1e-14, rtol=8.9e-16)
    m2 = brentq(lambda t: eos.dp(t) - level, lm.tau2_i * (1 + 1e-13),
                lm.tau2_a * (1 + 1e-9), xtol=1e-14, rtol=8.9e-16)
    return m1, m2


def psi_po(eos, tau_f):
    """Downstream volume of the post-sonic shock from tau_f.

    Defined for tau_f in (tau1_e, tau2_i); the root of
    p'(tau_b) = chord slope lies in (tau2_i, tau2_e) and decreases with
    tau_f, approaching tau2_e at the double-sonic end and tau2_i as the
    shock degenerates.
    """
    lm = eos.landmarks()
    if not (lm.tau1_e - 1e-12 <= tau_f < lm.tau2_i):
        raise ShockError(
            f"post-sonic matching needs tau_f in [{lm.tau1_e:.6g}, "
            f"{lm.tau2_i:.6g}); got {tau_f:.6g}")
    if tau_f >= lm.tau2_i * (1 - 1e-5):
        # degenerate end: cubic balance at the inflection gives a partner
        # half as far on the other side
        return lm.tau2_i + 0.5 * (lm.tau2_i - tau_f)

    def f(tb):
        return eos.dp(tb) * (tb * tb - tau_f * tau_f) \
            - (2.0 * eos.h(tb) - 2.0 * eos.h(tau_f))

    hi = lm.tau2_e * (1 + 1e-9)
    lo = lm.tau2_i
    if np.sign(f(lo)) == np.sign(f(hi)):
        raise ShockError(f"post-sonic root not bracketed for tau_f={tau_f}")
    return brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16)


def psi_pr(eos, tau_f):
    """Downstream volume of the pre-sonic shock from tau_f.

    Defined for tau_f in (tau1_e, tau1_i); the root of
    p'(tau_f) = chord slope lies in (tau1_i, tau2_e), decreasing from
    tau2_e (double-sonic end) to tau1_i (degenerate end).  The root is
    unique between the two volumes where p' comes back to p'(tau_f).
    """
    lm = eos.landmarks()
    if not (lm.tau1_e - 1e-12 <= tau_f <= lm.tau1_i + 1e-12):
        raise ShockError(
            f"pre-sonic matching needs tau_f in [{lm.tau1_e:.6g}, "
            f"{lm.tau1_i:.6g}]; got {tau_f:.6g}")
    tau_f = min(max(tau_f, lm.tau1_e), lm.tau1_i)
    if tau_f >= lm.tau1_i * (1 - 1e-5):
        # degenerate end: cubic balance puts the partner twice as far
        return lm.tau1_i + 2.0 * (lm.tau1_i - tau_f)
    level = eos.dp(tau_f)

    def f(tb):
        return level * (tb * tb - tau_f * tau_f) \
            - (2.0 * eos.h(tb) - 2.0 * eos.h(tau_f))

    m1, m2 = _partner_brackets(eos, tau_f)
    # f is increasing on [m1, m2]; shrink the left end until f < 0
    lo, hi = m1, m2
    if f(hi) < 0.0:
        raise ShockError(f"pre-sonic root not bracketed for tau_f={tau_f}")
    while f(lo) > 0.0:
        lo = 0.5 * (lo + tau_f)
        if lo - tau_f < 1e-13:
            return m1
    return brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16)


class ObliqueShock:
    """A solved oblique rarefaction shock between two uniform states."""

    def __init__(self, up, down, phi, family, m):
        self.up = up
        self.down = down
        self.phi = phi
        self.family = family
        self.m = m
        sgn = -1.0 if family == 1 else 1.0
        self.N_f = sgn * (up.u * np.sin(phi) - up.v * np.cos(phi))
        self.N_b = sgn * (down.u * np.sin(phi) - down.v * np.cos(phi))
        self.L_f = up.u * np.cos(phi) + up.v * np.sin(phi)
        self.L_b = down.u * np.cos(phi) + down.v * np.sin(phi)
        self.sonic_class = classify_sonic(self)

    def rh_residuals(self):
        """(mass, tangential, normal-enthalpy) residual triple."""
        eos = self.up.ctx.eos
        r1 = abs(self.up.rho * self.N_f - self.down.rho * self.N_b)
        r2 = abs(self.L_f - self.L_b)
        r3 = abs(self.N_f ** 2 + 2 * eos.h(self.up.tau)
                 - self.N_b ** 2 - 2 * eos.h(self.down.tau))
        return r1, r2, r3

    def angle_bounds_ok(self, tol=1e-9):
        """Family bracket and Mach-angle bounds of the deflection."""
        up, dn, phi = self.up, self.down, self.phi
        if self.family == 1:
            bracket = dn.beta - tol <= phi <= up.beta + tol
            bounds = (up.A - tol <= up.sigma - phi < dn.sigma - phi
                      <= dn.A + tol)
        else:
            bracket = up.alpha - tol <= phi <= dn.alpha + tol
            bounds = (up.A - tol <= phi - up.sigma < phi - dn.sigma + tol
                      <= dn.A + tol)
        return bracket and bounds

    def as_dict(self):
        return {
            "phi": self.phi, "family": self.family, "m": self.m,
            "sonic_class": self.sonic_class,
            "up": {"u": self.up.u, "v": self.up.v, "tau": self.up.tau},
            "down": {"u": self.down.u, "v": self.down.v,
                     "tau": self.down.tau},
            "N_f": self.N_f, "N_b": self.N_b, "L": self.L_f,
        }


def classify_sonic(shock, rel_tol=1e-7):
    """Compare both normal speeds with the local sound speeds."""
    front_sonic = abs(shock.N_f - shock.up.c) <= rel_tol * shock.up.c
    back_sonic = abs(shock.N_b - shock.down.c) <= rel_tol * shock.down.c
    if front_sonic and back_sonic:
        return "double-sonic"
    if back_sonic:
        return "post-sonic"
    if front_sonic:
        return "pre-sonic"
    return "transonic"


def solve_oblique_shock(ctx, up, tau_b, family, check_liu=True):
    """Solve the jump conditions for a rarefaction shock of the given
    family with upstream state `up` and downstream volume tau_b.

    The shock strength is parametrized by tau_b; the inclination follows
    from the mass flux, phi = sigma_f +/- arcsin(tau_f m / q_f).
    """
    eos = ctx.eos
    tau_f = up.tau
    if not tau_b > tau_f:
        raise ShockError("downstream volume must exceed upstream volume")
    if check_liu:
        ok, slack = liu_admissible(eos, tau_f, tau_b)
        if not ok:
            raise InadmissiblePair(
                f"entropy condition fails: worst chord slack {slack:.3e}")
    m = float(np.sqrt(mass_flux_sq(eos, tau_f, tau_b)))
    sin_arg = tau_f * m / up.q
    if sin_arg > 1.0 + 1e-14:
        raise DetachedShock(
            f"normal speed exceeds flow speed (sin argument {sin_arg:.6g})")
    dev = np.arcsin(min(sin_arg, 1.0))
    sgn = -1.0 if family == 1 else 1.0
    phi = up.sigma + sgn * dev
    N_b = tau_b * m
    L = up.q * np.cos(dev)
    if family == 2:
        u_b = N_b * np.sin(phi) + L * np.cos(phi)
        v_b = -N_b * np.cos(phi) + L * np.sin(phi)
    else:
        u_b = -N_b * np.sin(phi) + L * np.cos(phi)
        v_b = N_b * np.cos(phi) + L * np.sin(phi)
    down = state_from_uv(ctx, u_b, v_b)
    return ObliqueShock(up, down, phi, family, m)


def post_sonic_corner_state(ctx, tau0=None):
    """Closed-form post-sonic shock off the inlet state (u0, 0).

    phi_po = arcsin(rho_po c_po / (rho_0 u_0)),
    u_po = c_po sin(phi_po) + u_0 cos^2(phi_po),
    v_po = u_0 cos(phi_po) sin(phi_po) - c_po cos(phi_po).

    Returns (phi_po, u_po, v_po, tau_po) for the lower-corner (2-shock)
    family; mirror v for the upper corner.
    """
    tau_f = ctx.tau0 if tau0 is None else tau0
    tau_po = psi_po(ctx.eos, tau_f)
    c_po = tau_po * np.sqrt(-ctx.eos.dp(tau_po))
    rho_po = 1.0 / tau_po
    rho0 = 1.0 / tau_f
    phi_po = np.arcsin(rho_po * c_po / (rho0 * ctx.u0))
    u_po = c_po * np.sin(phi_po) + ctx.u0 * np.cos(phi_po) ** 2
    v_po = ctx.u0 * np.cos(phi_po) * np.sin(phi_po) - c_po * np.cos(phi_po)
    return phi_po, u_po, v_po, tau_po
