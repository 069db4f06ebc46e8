"""Evaluable flow fields: uniform states, centered fans, lattice patches.

Shock fitting integrates along a curve through a known upstream field
and needs the state plus the spatial gradients of density and flow
direction at arbitrary points.  The implementations here share that
small protocol:

    state_at(x, y)          -> FlowState
    grads_at(x, y)          -> (drho_dx, drho_dy, dsig_dx, dsig_dy)
    contains(x, y)          -> bool (domain test, best effort)
"""

import numpy as np

from ..kinematics import state_from_uv


class ConstantField:
    """Uniform state everywhere."""

    def __init__(self, state):
        self.state = state

    def state_at(self, x, y):
        return self.state

    def grads_at(self, x, y):
        return 0.0, 0.0, 0.0, 0.0

    def contains(self, x, y):
        return True


class CenteredFanField:
    """Self-similar centered fan about a corner point.

    The state depends only on the ray angle; its derivative along the
    fan parameter follows from the fan equations in closed form, so the
    spatial gradients are exact:

        grad(angle) = (-sin(angle), cos(angle)) / distance,
        d(tau)/d(angle) = -family * 2 q c cos A / (tau^2 p''),
        d(sigma)/d(angle) = -2 p' cos^2 A / (tau p'')   (both families).
    """

    def __init__(self, fan, center):
        self.fan = fan
        self.center = center
        self.ctx = fan.ctx
        lo = min(fan.angle_start, fan.angle_end)
        hi = max(fan.angle_start, fan.angle_end)
        self.angle_lo, self.angle_hi = lo, hi

    def _angle(self, x, y):
        ang = np.arctan2(y - self.center[1], x - self.center[0])
        # trial evaluations of an integrator may overshoot the fan edge
        # slightly before its event cuts the step; clip them in
        return float(np.clip(ang, self.angle_lo, self.angle_hi))

    def contains(self, x, y):
        ang = np.arctan2(y - self.center[1], x - self.center[0])
        return self.angle_lo - 1e-12 <= ang <= self.angle_hi + 1e-12

    def state_at(self, x, y):
        return self.fan.state_at_angle(self._angle(x, y))

    def grads_at(self, x, y):
        ang = self._angle(x, y)
        st = self.fan.state_at_angle(ang)
        eos = self.ctx.eos
        dd = eos.ddp(st.tau)
        d = eos.dp(st.tau)
        fam = self.fan.family
        dtau = -fam * 2.0 * st.q * st.c * np.cos(st.A) / (st.tau ** 2 * dd)
        dsig = -2.0 * d * np.cos(st.A) ** 2 / (st.tau * dd)
        drho = -dtau / st.tau ** 2
        R = np.hypot(x - self.center[0], y - self.center[1])
        gx, gy = -np.sin(ang) / R, np.cos(ang) / R
        return drho * gx, drho * gy, dsig * gx, dsig * gy


class LatticeField:
    """Interpolated field over a characteristic lattice patch.

    States are interpolated linearly over the node cloud; gradients come
    from the characteristic-direction differences cached on the lattice,
    rotated to Cartesian components.
    """

    def __init__(self, lattice):
        from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator
        self.lattice = lattice
        pts, vals = lattice.node_cloud(("u", "v", "rho", "sigma"))
        grads = lattice.cartesian_gradients()
        self._interp = LinearNDInterpolator(pts, np.column_stack(
            [vals["u"], vals["v"], grads["rho_x"], grads["rho_y"],
             grads["sigma_x"], grads["sigma_y"]]))
        self._near = NearestNDInterpolator(pts, np.column_stack(
            [vals["u"], vals["v"], grads["rho_x"], grads["rho_y"],
             grads["sigma_x"], grads["sigma_y"]]))
        self.ctx = lattice.ctx

    def _row(self, x, y):
        row = self._interp(x, y)
        if np.any(np.isnan(row)):
            row = self._near(x, y)
        return np.atleast_2d(row)[0]

    def contains(self, x, y):
        return not np.any(np.isnan(self._interp(x, y)))

    def state_at(self, x, y):
        row = self._row(x, y)
        return state_from_uv(self.ctx, row[0], row[1])

    def grads_at(self, x, y):
        row = self._row(x, y)
        return row[2], row[3], row[4], row[5]


class CompositeField:
    """First field in the list whose domain contains the point wins."""

    def __init__(self, fields):
        self.fields = fields
        self.ctx = fields[0].ctx if hasattr(fields[0], "ctx") else None

    def _pick(self, x, y):
        for f in self.fields:
            if f.contains(x, y):
                return f
        return self.fields[-1]

    def contains(self, x, y):
        return any(f.contains(x, y) for f in self.fields)

    def state_at(self, x, y):
        return self._pick(x, y).state_at(x, y)

    def grads_at(self, x, y):
        return self._pick(x, y).grads_at(x, y)
