"""Composite Gauss-Legendre rules and closed-form sinc integrals."""
from __future__ import annotations

import math
from functools import lru_cache

import mpmath
import numpy as np

from .xprec import PrecisionContext


@lru_cache(maxsize=64)
def _gl_mp(order: int, bits: int):
    ctx = mpmath.MPContext()
    ctx.prec = bits + 16
    X, W = ctx.gauss_quadrature(order, "legendre")
    return tuple(X), tuple(W)


def gl_rule_mp(order: int, ctx: PrecisionContext):
    """Gauss-Legendre nodes and weights on [-1, 1] at ``ctx`` precision."""
    X, W = _gl_mp(order, ctx.bits)
    mp = ctx.mp
    return [mp.mpf(x) for x in X], [mp.mpf(w) for w in W]


def panel_edges(lo, hi, max_width, breaks=()):
    """Edges splitting [lo, hi] into panels no wider than ``max_width``.

    Interior ``breaks`` are always kept as panel edges.
    """
    pts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    edges = [pts[0]]
    for a, b in zip(pts, pts[1:]):
        k = max(1, int(math.ceil(float((b - a) / max_width))))
        edges.extend(a + (b - a) * j / k for j in range(1, k + 1))
    return edges


def composite_nodes_mp(edges, order, ctx):
    """Nodes and weights of the composite rule over consecutive ``edges``."""
    t, w = gl_rule_mp(order, ctx)
    xs, ws = [], []
    for a, b in zip(edges, edges[1:]):
        half = (b - a) / 2
        mid = (a + b) / 2
        xs.extend(mid + half * ti for ti in t)
        ws.extend(half * wi for wi in w)
    return xs, ws


def composite_nodes_np(edges, order):
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    xs = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    return xs, ws


def cin(z, mp):
    """Entire cosine integral ``Cin(z) = int_0^z (1 - cos t)/t dt`` (even in z)."""
    z = abs(z)
    if z == 0:
        return mp.zero
    if z < 1:
        return z * z * mp.hyp2f3(1, 1, 2, 2, mp.mpf(3) / 2, -z * z / 4) / 4
    return mp.euler + mp.log(z) - mp.ci(z)


def sinc_window_transform(q, a, u1, u2, mp):
    """``int_{u1}^{u2} sin(a u)/(pi u) * exp(-i q u) du`` in closed form.

    Uses ``sin(au)cos(qu)/u -> (Si((a+q)u) + Si((a-q)u))/2`` and
    ``sin(au)sin(qu)/u -> (Cin(|a+q|u) - Cin(|a-q|u))/2``.
    """
    ap, am = a + q, a - q

    def fc(u):
        return (mp.si(ap * u) + mp.si(am * u)) / 2

    def fs(u):
        return (cin(ap * u, mp) - cin(am * u, mp)) / 2

    re = fc(u2) - fc(u1)
    im = fs(u2) - fs(u1)
    return mp.mpc(re, -im) / mp.pi


def sinc_product_tail(xr, xs, a, L, mp):
    """``int_L^inf k(x - xr) k(x - xs) dx`` for ``k(u) = sin(a u)/(pi u)``, ``L > xr, xs``."""
    pi = mp.pi
    if xr == xs:
        U = L - xr
        return (mp.sin(a * U) ** 2 / U + a * (pi / 2 - mp.si(2 * a * U))) / pi ** 2
    d = xs - xr
    sigma = xr + xs

    def osc(xt):
        # int_L^inf cos(2 a x - a sigma) / (x - xt) dx
        U = L - xt
        theta = 2 * a * xt - a * sigma
        return -mp.cos(theta) * mp.ci(2 * a * U) - mp.sin(theta) * (pi / 2 - mp.si(2 * a * U))

    smooth = mp.cos(a * d) * mp.log((L - xr) / (L - xs))
    return (smooth - (osc(xs) - osc(xr))) / (2 * pi ** 2 * d)
