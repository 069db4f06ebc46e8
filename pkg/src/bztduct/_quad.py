"""Cumulative Gauss-Legendre quadrature over geometric panels.

Used for the enthalpy and turning-integral tables: both are smooth
integrals evaluated millions of times inside root-finding loops, so
they are cached panelwise once and evaluated by a partial-panel Gauss
sum afterwards.
"""

import numpy as np

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(24)


class CumulativeGauss:
    """F(x) = integral_lo^x f(t) dt for x in [lo, hi], panel-cached."""

    def __init__(self, f, lo, hi, n_panels=400):
        self.f = f
        self.lo = lo
        self.hi = hi
        self.edges = np.geomspace(lo, hi, n_panels + 1)
        mid = 0.5 * (self.edges[1:] + self.edges[:-1])
        half = 0.5 * (self.edges[1:] - self.edges[:-1])
        pts = mid[:, None] + half[:, None] * _NODES[None, :]
        panel = (f(pts) * _WEIGHTS[None, :]).sum(axis=1) * half
        self.cum = np.concatenate([[0.0], np.cumsum(panel)])

    @property
    def total(self):
        return self.cum[-1]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xs = np.atleast_1d(x).astype(float)
        k = np.clip(np.searchsorted(self.edges, xs, side="right") - 1, 0,
                    len(self.edges) - 2)
        lo = self.edges[k]
        mid = 0.5 * (lo + xs)
        half = 0.5 * (xs - lo)
        pts = mid[:, None] + half[:, None] * _NODES[None, :]
        part = (self.f(pts) * _WEIGHTS[None, :]).sum(axis=1) * half
        out = self.cum[k] + part
        return float(out[0]) if scalar else out
