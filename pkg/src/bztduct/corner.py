"""Self-similar corner solutions: the oblique wave at a sharp ramp.

The flow turning through angle theta at a corner is read off the
rarefactive wave curve of the inlet state: the curve's direction
parametrization is strictly monotone in the downstream volume, so theta
selects a unique point, and the segment it lands in fixes the wave
configuration

    F   -> f      single centered fan
    S   -> s      single oblique shock
    SF  -> sf     post-sonic shock + trailing fan
    FS  -> fs     leading fan + pre-sonic shock standing inside it
    FSF -> fsf    fan + double-sonic shock + fan

plus vacuum-truncated variants when theta lies beyond the curve (the
terminal fan then runs to the numeric vacuum cap and a vacuum sector
fills the remaining opening).  Lower-corner solutions use the 2-family;
upper corners are solved by mirror symmetry.
"""

import numpy as np

from .kinematics import state_from_tau_sigma
from .shock import solve_oblique_shock, liu_admissible
from .wave_curves import build_wave_curve, integrate_fan

__all__ = ["CornerSector", "CornerSolution", "solve_ramp",
           "classify_interaction", "INTERACTION_INDEX", "CornerError"]

# fully orchestrated pipelines exist for 1, 2 and 6; the remaining pairs
# are classified and reported with their building blocks
INTERACTION_INDEX = {
    ("f", "f"): 1, ("sf", "sf"): 2,
    ("s", "sf"): 3, ("sf", "s"): 3,
    ("s", "s"): 4, ("fsf", "fsf"): 5,
    ("f", "sf"): 6, ("sf", "f"): 6,
    ("fs", "sf"): 7, ("sf", "fs"): 7,
    ("fsf", "fs"): 8, ("fs", "fsf"): 8,
    ("fsf", "f"): 9, ("f", "fsf"): 9,
    ("fs", "f"): 10, ("f", "fs"): 10,
    ("f", "s"): 11, ("s", "f"): 11,
    ("fs", "s"): 12, ("s", "fs"): 12,
    ("fs", "fs"): 13,
}


class CornerError(ValueError):
    pass


class CornerSector:
    """One angular sector of a self-similar corner solution.

    kind: 'constant' | 'fan' | 'shock' | 'vacuum'.  Angles are ray
    inclinations at the corner; for lower corners sectors are listed in
    decreasing angle from pi/2 to the wall, for upper corners in
    increasing angle from -pi/2.
    """

    def __init__(self, kind, angle_hi, angle_lo, state=None, fan=None,
                 shock=None):
        self.kind = kind
        self.angle_hi = angle_hi
        self.angle_lo = angle_lo
        self.state = state
        self.fan = fan
        self.shock = shock

    def as_dict(self):
        d = {"kind": self.kind, "angle_hi": self.angle_hi,
             "angle_lo": self.angle_lo}
        if self.state is not None:
            d["state"] = {"u": self.state.u, "v": self.state.v,
                          "tau": self.state.tau}
        if self.shock is not None:
            d["shock"] = self.shock.as_dict()
        return d


class CornerSolution:
    """Angular solution of the ramp problem at one corner."""

    def __init__(self, ctx, theta, side, config_tag, sectors,
                 terminal_state, vacuum_angle=None):
        self.ctx = ctx
        self.theta = theta
        self.side = side
        self.config_tag = config_tag
        self.sectors = sectors
        self.terminal_state = terminal_state
        self.vacuum_angle = vacuum_angle
        self.center = (0.0, -1.0) if side == "lower" else (0.0, 1.0)

    @property
    def has_vacuum(self):
        return self.config_tag.endswith("-vac")

    @property
    def base_tag(self):
        return self.config_tag.replace("-vac", "")

    def state_at_angle(self, ang):
        """State on the ray of inclination `ang` (None inside vacuum)."""
        for sec in self.sectors:
            lo, hi = sorted((sec.angle_lo, sec.angle_hi))
            if lo - 1e-12 <= ang <= hi + 1e-12:
                if sec.kind == "constant":
                    return sec.state
                if sec.kind == "fan":
                    if self.side == "lower":
                        return sec.fan.state_at_angle(ang)
                    return sec.fan.state_at_angle(-ang).mirrored()
                if sec.kind == "vacuum":
                    return None
        raise CornerError(f"angle {ang:.6g} outside the solved range")

    def slip_residual(self):
        if self.terminal_state is None:
            return 0.0
        st = self.terminal_state
        return abs(st.v - st.u * np.tan(self.theta))

    def shocks(self):
        return [s for s in self.sectors if s.kind == "shock"]

    def leading_angle(self):
        """Inclination of the first wave front behind the incoming flow."""
        first = self.sectors[1]
        return first.angle_hi if self.side == "lower" else first.angle_lo

    def as_dict(self):
        return {
            "side": self.side, "theta": self.theta,
            "config_tag": self.config_tag,
            "vacuum_angle": self.vacuum_angle,
            "slip_residual": self.slip_residual(),
            "sectors": [s.as_dict() for s in self.sectors],
        }


def _fan_sector(ctx, fan):
    return CornerSector("fan", fan.angle_start, fan.angle_end, fan=fan)


def _solve_lower(ctx, theta, n_branch):
    eos = ctx.eos
    inlet = state_from_tau_sigma(ctx, ctx.tau0, 0.0)
    sectors = [CornerSector("constant", np.pi / 2, inlet.alpha, state=inlet)]
    if abs(theta) < 1e-14:
        sec = CornerSector("constant", inlet.alpha, theta, state=inlet)
        return CornerSolution(ctx, theta, "lower", "f", sectors + [sec],
                              inlet)

    curve = build_wave_curve(ctx, family=2, n_branch=n_branch)
    tau_star = curve.tau_for_sigma(theta)
    vacuum_angle = None

    if tau_star is None:
        # theta beyond the curve: terminal fan runs to the cap, the rest
        # of the opening is (numerically) vacuum
        seg = curve.segments[-1]
        tag = {"F": "f-vac", "SF": "sf-vac", "FSF": "fsf-vac"}[seg.tag]
        sectors += _assemble(ctx, curve, seg, None, n_branch)
        vacuum_angle = sectors[-1].angle_lo
        sectors.append(CornerSector("vacuum", vacuum_angle, theta))
        return CornerSolution(ctx, theta, "lower", tag, sectors, None,
                              vacuum_angle)

    seg = curve.segment_at(tau_star)
    tag = {"F": "f", "S": "s", "SF": "sf", "FS": "fs", "FSF": "fsf"}[seg.tag]
    sectors += _assemble(ctx, curve, seg, tau_star, n_branch)
    terminal = curve.state_at(tau_star)
    sectors.append(CornerSector("constant", sectors[-1].angle_lo, theta,
                                state=terminal))
    return CornerSolution(ctx, theta, "lower", tag, sectors, terminal)


def _assemble(ctx, curve, terminal_seg, tau_star, n_branch):
    """Sector list for the wave between the incoming constant and the
    terminal state (exclusive)."""
    eos = ctx.eos
    inlet = curve.anchor
    out = []
    tag = terminal_seg.tag

    if tag == "F":
        stop = tau_star if tau_star is not None else None
        fan = integrate_fan(ctx, inlet, +1, stop_tau=stop)
        out.append(_fan_sector(ctx, fan))
        return out

    if tag == "S":
        sh = solve_oblique_shock(ctx, inlet, tau_star, family=2)
        out.append(CornerSector("shock", sh.phi, sh.phi, shock=sh))
        return out

    if tag == "SF":
        # post-sonic shock off the inlet, then the trailing fan
        s_seg = next(s for s in curve.segments if s.tag == "S")
        sh = solve_oblique_shock(ctx, inlet, s_seg.tau_hi, family=2)
        out.append(CornerSector("shock", sh.phi, sh.phi, shock=sh))
        fan = integrate_fan(ctx, sh.down, +1, stop_tau=tau_star)
        out.append(_fan_sector(ctx, fan))
        return out

    if tag == "FS":
        # leading fan cut at the ray where the pre-sonic shock stands
        fs_info = terminal_seg.info
        idx = np.searchsorted(terminal_seg.tau, tau_star)
        # invert the downstream parametrization for the front volume
        from scipy.optimize import brentq
        from .shock import psi_pr
        tf_arr = fs_info["tau_front"]
        tf = brentq(lambda t: psi_pr(eos, t) - tau_star,
                    tf_arr.min(), tf_arr.max(), xtol=1e-14)
        lead = integrate_fan(ctx, inlet, +1, stop_tau=tf)
        out.append(_fan_sector(ctx, lead))
        up = lead.state_at_tau(tf)
        sh = solve_oblique_shock(ctx, up, tau_star, family=2)
        out.append(CornerSector("shock", sh.phi, sh.phi, shock=sh))
        return out

    if tag == "FSF":
        lm = eos.landmarks()
        lead = integrate_fan(ctx, inlet, +1, stop_tau=lm.tau1_e)
        out.append(_fan_sector(ctx, lead))
        up = lead.state_at_tau(lm.tau1_e)
        sh = solve_oblique_shock(ctx, up, lm.tau2_e, family=2)
        out.append(CornerSector("shock", sh.phi, sh.phi, shock=sh))
        fan = integrate_fan(ctx, sh.down, +1, stop_tau=tau_star)
        out.append(_fan_sector(ctx, fan))
        return out

    raise CornerError(f"unknown terminal segment {tag}")


def _mirror_solution(sol, theta):
    """Upper-corner solution from the lower-corner one at -theta."""
    sectors = []
    for sec in sol.sectors:
        if sec.kind == "constant":
            sectors.append(CornerSector("constant", -sec.angle_hi,
                                        -sec.angle_lo,
                                        state=sec.state.mirrored()))
        elif sec.kind == "fan":
            sectors.append(CornerSector("fan", -sec.angle_hi, -sec.angle_lo,
                                        fan=sec.fan))
        elif sec.kind == "shock":
            sh = sec.shock
            msh = solve_oblique_shock(sh.up.ctx, sh.up.mirrored(),
                                      sh.down.tau, family=1, check_liu=False)
            sectors.append(CornerSector("shock", -sec.angle_hi,
                                        -sec.angle_lo, shock=msh))
        else:
            sectors.append(CornerSector("vacuum", -sec.angle_hi,
                                        -sec.angle_lo))
    term = sol.terminal_state.mirrored() if sol.terminal_state else None
    vac = -sol.vacuum_angle if sol.vacuum_angle is not None else None
    return CornerSolution(sol.ctx, theta, "upper", sol.config_tag, sectors,
                          term, vac)


def solve_ramp(ctx, theta, side="lower", n_branch=240):
    """Solve the corner Riemann problem for wall angle `theta`.

    Lower corners take theta in (-pi/2, 0], upper corners in [0, pi/2).
    """
    if side == "lower":
        if not -np.pi / 2 < theta <= 0:
            raise CornerError("lower-corner angle must lie in (-pi/2, 0]")
        sol = _solve_lower(ctx, theta, n_branch)
    elif side == "upper":
        if not 0 <= theta < np.pi / 2:
            raise CornerError("upper-corner angle must lie in [0, pi/2)")
        sol = _mirror_solution(_solve_lower(ctx, -theta, n_branch), theta)
    else:
        raise CornerError("side must be 'lower' or 'upper'")
    _check_adjacency(sol)
    return sol


def _check_adjacency(sol, tol=1e-7):
    """Adjacent sectors must share states across common rays; shock rays
    must be admissible."""
    for a, b in zip(sol.sectors[:-1], sol.sectors[1:]):
        if a.kind == "shock" or b.kind == "shock":
            continue
        if a.kind == "vacuum" or b.kind == "vacuum":
            continue
        ang = a.angle_lo if sol.side == "lower" else a.angle_hi
        sa = sol.state_at_angle(ang - 1e-13) if sol.side == "lower" \
            else sol.state_at_angle(ang + 1e-13)
        sb = sol.state_at_angle(ang)
        if abs(sa.u - sb.u) > tol * max(1, abs(sa.u)) \
                or abs(sa.v - sb.v) > tol * max(1, abs(sa.q)):
            raise CornerError(
                f"sector states disagree at ray {ang:.8g}: "
                f"({sa.u:.8g},{sa.v:.8g}) vs ({sb.u:.8g},{sb.v:.8g})")
    for sec in sol.shocks():
        sh = sec.shock
        ok, slack = liu_admissible(sol.ctx.eos, sh.up.tau, sh.down.tau)
        if not ok:
            raise CornerError(f"shock ray at {sh.phi:.6g} violates the "
                              f"entropy condition (slack {slack:.2e})")


def classify_interaction(upper_sol, lower_sol):
    """Ordered pair tag of the two corner waves plus pipeline eligibility.

    Returns a dict with the pair tag (upper x lower), the matching
    interaction index (1..13; vacuum-truncated corners classify by their
    base configuration) and whether a fully orchestrated duct pipeline
    exists for the pair.
    """
    bu, bl = upper_sol.base_tag, lower_sol.base_tag
    pair = f"{bu}x{bl}"
    idx = INTERACTION_INDEX.get((bu, bl))
    orchestrated = idx in (1, 2, 6) and not (upper_sol.has_vacuum
                                             or lower_sol.has_vacuum)
    return {
        "pair": pair,
        "interaction_index": idx,
        "orchestrated": orchestrated,
        "upper": upper_sol.config_tag,
        "lower": lower_sol.config_tag,
    }
