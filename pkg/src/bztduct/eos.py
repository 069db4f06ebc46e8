"""Nonconvex (BZT) equations of state on an isentrope.

The solver works with barotropic laws p = p(tau) (tau = specific volume)
that are strictly decreasing, twice continuously differentiable, have
exactly one concave interval (tau1_i, tau2_i) where p'' < 0, and decay
like a power law at large tau.  Fluids of this kind support rarefaction
shocks; the landmark volumes computed here (inflection, auxiliary and
double-sonic pairs) organize every wave construction downstream.

Two concrete constructors are provided:

    make_vdw_like   van-der-Waals-class isentrope
                    p(tau) = K (tau - b)^(-gamma) - a / tau^2,
                    the default BZT model,
    make_polytropic p(tau) = K tau^(-gamma), globally convex; used for
                    Prandtl-Meyer limit tests and as the non-BZT branch.

Enthalpy h(tau) is defined by h'(tau) = tau p'(tau) and anchored so that
h -> 0 as tau -> infinity.  It is evaluated by cached panelwise
Gauss-Legendre quadrature (no closed form is assumed), so any law
satisfying the assumptions can be plugged in.
"""

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

__all__ = [
    "EosError",
    "AssumptionError",
    "LandmarkNotFound",
    "EosModel",
    "EosLandmarks",
    "make_vdw_like",
    "make_polytropic",
    "find_landmarks",
    "sound_speed",
    "fundamental_derivative",
]

DEFAULT_VDW_PARAMS = {"K": 2.6, "gamma": 1.03, "a": 3.0, "b": 1.0 / 3.0}


class EosError(ValueError):
    """Base error for equation-of-state construction and queries."""


class AssumptionError(EosError):
    """The pressure law violates one of the structural assumptions."""


class LandmarkNotFound(EosError):
    """A landmark volume could not be bracketed; carries the scan report."""


def _gauss_panels(lo, hi, n_panels):
    """Geometric panel edges on [lo, hi] for cumulative quadrature."""
    return np.geomspace(lo, hi, n_panels + 1)


def fit_tail_power(dp, tau_hi):
    """Fit p'(tau) ~ -C tau^(-gamma-1) on [tau_hi/4, tau_hi].

    Returns (C, gamma, log-log slope spread).  The decay exponent exists
    by assumption; the fit quality feeds the anchoring error estimate.
    """
    ts = np.geomspace(0.25 * tau_hi, tau_hi, 24)
    slopes = np.diff(np.log(-dp(ts))) / np.diff(np.log(ts))
    gamma = -slopes.mean() - 1.0
    C = float(-dp(tau_hi) * tau_hi ** (gamma + 1.0))
    return C, gamma, float(np.ptp(slopes))


class _CachedEnthalpy:
    """h(tau) with h' = tau p'(tau), anchored so h(+inf) = 0.

    A cumulative 24-point Gauss-Legendre table over geometric panels
    covers [tau_lo, tau_hi]; the anchor comes from the power-law tail of
    p' (h(tau_hi) = C tau_hi^(1-gamma) / (gamma - 1)), which also serves
    evaluations beyond the table.  For slowly decaying tails (gamma near
    1) the anchor carries a reported uncertainty `anchor_err`; the
    anchor is a uniform gauge shift, so enthalpy differences - the only
    quantity entering the flow physics - are unaffected by it.
    """

    _NODES, _WEIGHTS = np.polynomial.legendre.leggauss(24)

    def __init__(self, dp, tau_lo, tau_hi, n_panels=400):
        self.dp = dp
        self.tau_lo = tau_lo
        self.tau_hi = tau_hi
        self.edges = _gauss_panels(tau_lo, tau_hi, n_panels)
        integrand = lambda t: t * dp(t)
        self._integrand = integrand
        # panel integrals of tau*p'(tau)
        mid = 0.5 * (self.edges[1:] + self.edges[:-1])
        half = 0.5 * (self.edges[1:] - self.edges[:-1])
        pts = mid[:, None] + half[:, None] * self._NODES[None, :]
        vals = integrand(pts)
        panel = (vals * self._WEIGHTS[None, :]).sum(axis=1) * half
        self.cum = np.concatenate([[0.0], np.cumsum(panel)])  # from tau_lo
        # anchor at tau_hi from the asymptotic tail of p'
        C, gamma, spread = fit_tail_power(dp, tau_hi)
        self.tail_C = C
        self.tail_gamma = gamma
        h_hi = C * tau_hi ** (1.0 - gamma) / (gamma - 1.0)
        self.anchor_err = abs(h_hi) * (spread + 10.0 / tau_hi)
        self.h_lo = h_hi - self.cum[-1]

    def _tail(self, t):
        return (self.tail_C * t ** (1.0 - self.tail_gamma)
                / (self.tail_gamma - 1.0))

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        scalar = tau.ndim == 0
        t = np.atleast_1d(tau).astype(float)
        out = np.empty_like(t)
        inside = t <= self.tau_hi
        if np.any(inside):
            ti = t[inside]
            k = np.clip(np.searchsorted(self.edges, ti, side="right") - 1, 0,
                        len(self.edges) - 2)
            lo = self.edges[k]
            mid = 0.5 * (lo + ti)
            half = 0.5 * (ti - lo)
            pts = mid[:, None] + half[:, None] * self._NODES[None, :]
            vals = self._integrand(pts)
            part = (vals * self._WEIGHTS[None, :]).sum(axis=1) * half
            out[inside] = self.h_lo + self.cum[k] + part
        if np.any(~inside):
            out[~inside] = self._tail(t[~inside])
        return float(out[0]) if scalar else out


class EosModel:
    """A barotropic pressure law with derivatives and enthalpy.

    Attributes:
        p, dp, ddp: vectorized callables for p, p', p''.
        h: enthalpy callable, h' = tau p', h(+inf) = 0.
        params: dict of the concrete law's named parameters.
        tau_min: lower edge of the physical domain (covolume guard).
        is_bzt: True when the law has a concave interval.
    """

    def __init__(self, p, dp, ddp, params, tau_min, tau_table_hi=1e6,
                 name="custom"):
        self.p = p
        self.dp = dp
        self.ddp = ddp
        self.params = dict(params)
        self.tau_min = tau_min
        self.name = name
        self.h = _CachedEnthalpy(dp, tau_min, tau_table_hi)
        self.is_bzt = None  # set by verify_assumptions
        self._landmarks = None

    # -- assumption checks -------------------------------------------------

    def concavity_sign_pattern(self, n_grid=10_000, tau_hi=None):
        """Sign pattern of p'' on a geometric scan grid.

        Returns (n_sign_changes, change_locations).
        """
        hi = tau_hi if tau_hi is not None else min(self.h.tau_hi, 1e4)
        ts = np.geomspace(self.tau_min, hi, n_grid)
        sgn = np.sign(self.ddp(ts))
        flips = np.nonzero(np.diff(sgn) != 0)[0]
        return len(flips), ts[flips]

    def verify_assumptions(self, n_grid=10_000, tau_hi=None):
        """Check monotonicity, smoothness, single concave interval and
        power-law decay of p'.  Raises AssumptionError on failure."""
        hi = tau_hi if tau_hi is not None else min(self.h.tau_hi, 1e4)
        ts = np.geomspace(self.tau_min, hi, n_grid)
        d = self.dp(ts)
        if not np.all(d < 0):
            bad = ts[d >= 0]
            raise AssumptionError(
                f"p'(tau) >= 0 at {bad.size} grid points, e.g. tau={bad[0]:.6g}")
        for f, lab in ((self.p, "p"), (self.dp, "p'"), (self.ddp, "p''")):
            v = f(ts)
            if not np.all(np.isfinite(v)):
                raise AssumptionError(f"{lab} not finite on the scan grid")
        nflips, locs = self.concavity_sign_pattern(n_grid, tau_hi)
        if nflips == 0:
            self.is_bzt = False
        elif nflips == 2:
            dd_mid = self.ddp(np.sqrt(locs[0] * locs[1]))
            if dd_mid >= 0:
                raise AssumptionError(
                    "two p'' sign changes but the enclosed interval is convex; "
                    f"sign pattern at {locs}")
            self.is_bzt = True
        else:
            raise AssumptionError(
                f"p'' changes sign {nflips} times on the scan grid "
                f"(need 0 or 2); locations {locs}")
        # tail: tau^(gamma+1) p'(tau) should approach a constant for some
        # gamma > 1.  Ratio test on a geometric tail grid.
        t_tail = np.geomspace(0.5 * hi, hi, 16)
        expo = np.diff(np.log(-self.dp(t_tail))) / np.diff(np.log(t_tail))
        gamma_est = -expo.mean() - 1.0
        if not (gamma_est > 1.0 and np.ptp(expo) < 0.05):
            raise AssumptionError(
                f"p' tail is not a power law with exponent < -2: "
                f"estimated gamma={gamma_est:.4f}, spread={np.ptp(expo):.3g}")
        self.tail_gamma = gamma_est
        return self

    def enthalpy_residual(self, taus):
        """max relative gap between a finite-difference h' and tau p'(tau).

        Fourth-order five-point stencil with a step large enough to stay
        clear of roundoff in the (gauge-shifted) enthalpy values.
        """
        taus = np.asarray(taus, dtype=float)
        rel = 0.0
        for t in taus:
            dt = 1e-4 * t
            fd = (self.h(t - 2 * dt) - 8 * self.h(t - dt)
                  + 8 * self.h(t + dt) - self.h(t + 2 * dt)) / (12 * dt)
            ex = t * self.dp(t)
            rel = max(rel, abs(fd - ex) / abs(ex))
        return rel

    def landmarks(self):
        """Cached landmark volumes (computed on first use)."""
        if self._landmarks is None:
            self._landmarks = find_landmarks(self)
        return self._landmarks


class EosLandmarks:
    """Landmark specific volumes of a BZT law.

    tau1_i < tau2_i: inflection pair (p'' roots);
    tau1_a < tau2_a: auxiliary pair, p'(tau1_a) = p'(tau2_i) and
                     p'(tau1_i) = p'(tau2_a);
    tau1_e < tau2_e: double-sonic pair, p'(tau1_e) = p'(tau2_e) = chord slope.
    """

    def __init__(self, tau1_a, tau1_e, tau1_i, tau2_i, tau2_e, tau2_a):
        self.tau1_a = tau1_a
        self.tau1_e = tau1_e
        self.tau1_i = tau1_i
        self.tau2_i = tau2_i
        self.tau2_e = tau2_e
        self.tau2_a = tau2_a

    def ordered(self):
        return (0.0 < self.tau1_a < self.tau1_e < self.tau1_i
                < self.tau2_i < self.tau2_e < self.tau2_a)

    def as_dict(self):
        return {
            "tau1_a": self.tau1_a, "tau1_e": self.tau1_e,
            "tau1_i": self.tau1_i, "tau2_i": self.tau2_i,
            "tau2_e": self.tau2_e, "tau2_a": self.tau2_a,
        }

    def __repr__(self):
        return ("EosLandmarks(" + ", ".join(
            f"{k}={v:.12g}" for k, v in self.as_dict().items()) + ")")


def make_vdw_like(params=None):
    """Build the default van-der-Waals-class BZT model.

    p(tau) = K (tau - b)^(-gamma) - a / tau^2 with gamma slightly above 1
    (large heat capacity) produces a single concave interval while keeping
    p strictly decreasing.  Parameter sets without exactly one concave
    interval are rejected.
    """
    prm = dict(DEFAULT_VDW_PARAMS)
    if params:
        prm.update(params)
    K, gam, a, b = prm["K"], prm["gamma"], prm["a"], prm["b"]
    if K <= 0 or gam <= 1 or a < 0 or b < 0:
        raise EosError(f"invalid van-der-Waals-class parameters: {prm}")

    def p(t):
        return K * (t - b) ** (-gam) - a / t ** 2

    def dp(t):
        return -K * gam * (t - b) ** (-gam - 1) + 2 * a / t ** 3

    def ddp(t):
        return K * gam * (gam + 1) * (t - b) ** (-gam - 2) - 6 * a / t ** 4

    tau_min = prm.get("tau_min", b + 0.12 * max(b, 0.1))
    model = EosModel(p, dp, ddp, prm, tau_min, name="vdw_like")
    model.verify_assumptions()
    if not model.is_bzt:
        nfl, locs = model.concavity_sign_pattern()
        raise AssumptionError(
            f"parameters give no concave interval (p'' sign changes: {nfl} "
            f"at {locs}); not a BZT model")
    return model


def make_polytropic(gamma=1.4, K=1.0):
    """Polytropic law p = K tau^(-gamma): globally convex (p'' > 0).

    Not a BZT model; accepted as an EosModel for limit tests and for
    flows that never enter a concave region.
    """
    if gamma <= 1:
        raise EosError("polytropic exponent must exceed 1")

    def p(t):
        return K * t ** (-gamma)

    def dp(t):
        return -K * gamma * t ** (-gamma - 1)

    def ddp(t):
        return K * gamma * (gamma + 1) * t ** (-gamma - 2)

    model = EosModel(p, dp, ddp, {"gamma": gamma, "K": K}, tau_min=1e-3,
                     name="polytropic")
    model.verify_assumptions()
    return model


def sound_speed(eos, tau):
    """c = tau sqrt(-p'(tau))."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise EosError("specific volume must be positive")
    return tau * np.sqrt(-eos.dp(tau))


def fundamental_derivative(eos, tau):
    """G = tau^3 p''(tau) / (2 c^2); negative exactly where p'' < 0."""
    c2 = -np.asarray(tau, dtype=float) ** 2 * eos.dp(tau)
    return np.asarray(tau, dtype=float) ** 3 * eos.ddp(tau) / (2.0 * c2)


def chord_slope(eos, tau_a, tau_b):
    """Slope (2h(a) - 2h(b)) / (a^2 - b^2); equals -m^2 of the joining shock."""
    return (2.0 * eos.h(tau_a) - 2.0 * eos.h(tau_b)) / (tau_a ** 2 - tau_b ** 2)


def _bracketed_root(f, lo, hi, n_scan=400, label="root"):
    """Scan [lo, hi] geometrically for a sign change, then refine."""
    ts = np.geomspace(lo, hi, n_scan)
    vals = np.array([f(t) for t in ts])
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if len(idx) == 0:
        raise LandmarkNotFound(
            f"{label}: no sign change of target function on [{lo:.6g}, {hi:.6g}]; "
            f"scan range of values [{vals.min():.3g}, {vals.max():.3g}]")
    i = idx[0]
    return brentq(f, ts[i], ts[i + 1], xtol=1e-13, rtol=8.9e-16)


def find_landmarks(eos):
    """Locate the six landmark volumes of a BZT law.

    The inflection pair comes from bracketed roots of p''; the auxiliary
    pair from level-matching p'; the double-sonic pair from the coupled
    chord condition p'(t1e) = p'(t2e) = chord(t1e, t2e), solved by a
    nested one-dimensional search (the partner volume with equal p' is
    unique on the outer convex branch).
    """
    if eos.is_bzt is None:
        eos.verify_assumptions()
    if not eos.is_bzt:
        raise LandmarkNotFound(
            "no concave interval: p'' > 0 on the whole scan grid, "
            "landmarks are undefined for this law")
    nfl, locs = eos.concavity_sign_pattern()
    t1i = brentq(eos.ddp, locs[0] * 0.98, locs[0] * 1.02, xtol=1e-14)
    t2i = brentq(eos.ddp, locs[1] * 0.98, locs[1] * 1.02, xtol=1e-14)

    t1a = _bracketed_root(lambda t: eos.dp(t) - eos.dp(t2i),
                          eos.tau_min, t1i, label="tau1_a")
    t2a = _bracketed_root(lambda t: eos.dp(t) - eos.dp(t1i),
                          t2i * (1 + 1e-9), min(eos.h.tau_hi, 1e4), label="tau2_a")

    def upper_partner(x):
        # unique volume on (tau2_i, tau2_a) with p' equal to p'(x)
        return brentq(lambda t: eos.dp(t) - eos.dp(x), t2i * (1 + 1e-12),
                      t2a * (1 + 1e-9), xtol=1e-14, rtol=8.9e-16)

    def double_sonic_gap(x):
        y = upper_partner(x)
        return eos.dp(x) * (x * x - y * y) - (2 * eos.h(x) - 2 * eos.h(y))

    t1e = _bracketed_root(double_sonic_gap, t1a * (1 + 1e-10),
                          t1i * (1 - 1e-10), label="tau1_e")
    t2e = upper_partner(t1e)
    lm = EosLandmarks(t1a, t1e, t1i, t2i, t2e, t2a)
    if not lm.ordered():
        raise LandmarkNotFound(f"landmark ordering chain violated: {lm!r}")
    return lm
