"""Minimum-norm bandlimited interpolants and their evaluation.

For nodes ``x_k`` and amplitudes ``a_k`` the interpolant of least L2 norm
among functions with momentum support in ``[-p_max, p_max]`` is

    psi(x) = sum_r c_r sin((x - x_r) p_max/hbar) / (pi (x - x_r)),   c = S^{-1} a,

with ``||psi||^2 = a^H S^{-1} a``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .prolate import NodeSpec, ProlateMatrix, build_prolate, quadratic_form_inv, smallest_eigenpair
from .quadrature import composite_nodes_mp, panel_edges, sinc_product_tail
from .xprec import PrecisionContext

log = logging.getLogger(__name__)

__all__ = [
    "Wavefunction",
    "KernelSum",
    "synthesize",
    "eval_position",
    "eval_momentum",
    "normalize",
    "maximal_superoscillation",
    "local_wavelength",
    "parseval_norm_sq",
    "position_norm_sq",
    "inner_product",
    "to_json",
    "from_json",
    "WAVEFUNCTION_FORMAT",
]

WAVEFUNCTION_FORMAT = "superosc.wavefunction/1"


@dataclass(frozen=True)
class KernelSum:
    """``f(x) = sum_j coeffs[j] * k(x - centers[j])`` for the cutoff kernel ``k``."""

    centers: tuple
    coeffs: tuple
    p_max: object
    hbar: object
    ctx: PrecisionContext
    _phase: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mp = self.ctx.mp
        w = self.p_max / self.hbar
        ph = []
        for xr, cr in zip(self.centers, self.coeffs):
            c, s = mp.cos_sin(w * xr)
            ph.append((cr * c, cr * s))
        object.__setattr__(self, "_phase", tuple(ph))

    def kernel(self, u):
        mp = self.ctx.mp
        if u == 0:
            return self.p_max / (mp.pi * self.hbar)
        return mp.sin(u * self.p_max / self.hbar) / (mp.pi * u)

    def __call__(self, x):
        """Value at ``x`` (mpf or mpc depending on the coefficients)."""
        mp = self.ctx.mp
        x = self.ctx.mpf(x)
        if any(x == xr for xr in self.centers):
            return mp.fsum(c * self.kernel(x - xr) for xr, c in zip(self.centers, self.coeffs))
        # sin(w(x - x_r)) = sin(wx)cos(wx_r) - cos(wx)sin(wx_r)
        cx, sx = mp.cos_sin(x * self.p_max / self.hbar)
        A = mp.fsum(pc / (x - xr) for xr, (pc, _) in zip(self.centers, self._phase))
        B = mp.fsum(ps / (x - xr) for xr, (_, ps) in zip(self.centers, self._phase))
        return (sx * A - cx * B) / mp.pi

    def coeff_scale(self):
        """``sum |c_r| * p_max/(pi hbar)``: bound on |f| and the size of its terms."""
        mp = self.ctx.mp
        return mp.fsum(abs(c) for c in self.coeffs) * self.p_max / (mp.pi * self.hbar)

    def __add__(self, other: "KernelSum"):
        return KernelSum(self.centers + other.centers, self.coeffs + other.coeffs,
                         self.p_max, self.hbar, self.ctx)

    def scaled(self, factor):
        return KernelSum(self.centers, tuple(factor * c for c in self.coeffs),
                         self.p_max, self.hbar, self.ctx)


@dataclass(frozen=True)
class Wavefunction:
    """Minimum-norm interpolant of ``nodes``; ``coeffs = S^{-1} a``."""

    nodes: NodeSpec
    coeffs: tuple
    norm_sq: object
    prolate: ProlateMatrix = field(repr=False, compare=False)

    @property
    def ctx(self) -> PrecisionContext:
        return self.nodes.ctx

    @property
    def kernels(self) -> KernelSum:
        ks = self.__dict__.get("_kernels")
        if ks is None:
            ks = KernelSum(self.nodes.xs, self.coeffs, self.nodes.p_max, self.nodes.hbar, self.ctx)
            object.__setattr__(self, "_kernels", ks)
        return ks

    def __call__(self, x):
        return eval_position(self, x)

    def node_values(self):
        return [self.kernels(x) for x in self.nodes.xs]

    def interpolation_residual(self):
        """``max_k |psi(x_k) - a_k|``."""
        return max(abs(v - a) for v, a in zip(self.node_values(), self.nodes.amps))


def synthesize(nodes: NodeSpec, ctx: Optional[PrecisionContext] = None, prolate=None) -> Wavefunction:
    """Solve ``S c = a`` and package the interpolant.

    The precision is taken from ``ctx`` (default: the nodes' context) and
    never raised silently; a warning is logged when it is below the estimate.
    """
    ctx = nodes.ctx if ctx is None else ctx
    if ctx is not nodes.ctx:
        nodes = nodes.with_context(ctx)
    if nodes.amps is None:
        raise ValueError("synthesize needs prescribed amplitudes")
    need = nodes.required_bits()
    if ctx.bits < need:
        log.warning("working precision %d bits is below the estimated %d bits", ctx.bits, need)
    P = build_prolate(nodes, ctx) if prolate is None else prolate
    coeffs = P.solve(nodes.amps)
    norm_sq = quadratic_form_inv(P, nodes.amps)
    return Wavefunction(nodes, tuple(coeffs), norm_sq, P)


def eval_position(w: Wavefunction, x):
    """``psi(x)`` as an mpc of the wave function's context."""
    return w.ctx.mp.mpc(w.kernels(x))


def eval_momentum(w: Wavefunction, p):
    """``(2 pi hbar)^{-1/2} sum_r c_r exp(-i x_r p/hbar)`` on the band, 0 outside."""
    mp = w.ctx.mp
    p = w.ctx.mpf(p)
    nodes = w.nodes
    if abs(p) > nodes.p_max:
        return mp.mpc(0)
    s = mp.fsum(c * mp.expj(-xr * p / nodes.hbar) for xr, c in zip(nodes.xs, w.coeffs))
    return s / mp.sqrt(2 * mp.pi * nodes.hbar)


def normalize(w: Wavefunction) -> Wavefunction:
    """Rescale to unit norm; node amplitudes become ``a_k/||psi||``."""
    mp = w.ctx.mp
    if not w.norm_sq > 0:
        raise ValueError("cannot normalize a zero-norm wave function")
    scale = 1 / mp.sqrt(w.norm_sq)
    nodes = w.nodes.with_amps([a * scale for a in w.nodes.amps])
    return Wavefunction(nodes, tuple(c * scale for c in w.coeffs), w.norm_sq * scale * scale, w.prolate)


def maximal_superoscillation(geometry: NodeSpec, ctx: Optional[PrecisionContext] = None) -> Wavefunction:
    """Normalized interpolant with amplitudes along the ``s_min`` eigenvector.

    Its node amplitudes are ``sqrt(s_min) * v_k``, the largest achievable for
    that amplitude shape.
    """
    ctx = geometry.ctx if ctx is None else ctx
    if ctx is not geometry.ctx:
        geometry = geometry.with_context(ctx)
    P = build_prolate(geometry, ctx)
    _, v = smallest_eigenpair(P)
    nodes = geometry.with_amps(v)
    return normalize(synthesize(nodes, ctx, prolate=P))


def local_wavelength(w: Wavefunction, interval, points_per_gap: int = 64, mode: str = "re"):
    """Twice the mean spacing of zero crossings of Re psi inside ``interval``.

    ``mode="abs"`` uses the spacing of local maxima of ``|psi|`` instead
    (useful for complex amplitudes).  The sampling grid puts at least
    ``points_per_gap`` points in every node gap (or half ``lambda_min`` for a
    single node); sign changes are refined by bisection.
    """
    if mode not in ("re", "abs"):
        raise ValueError(f"unknown mode {mode!r}")
    ctx = w.ctx
    mp = ctx.mp
    lo, hi = (ctx.mpf(v) for v in interval)
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")
    nodes = w.nodes
    unit = nodes.lambda_min / 2
    if nodes.min_gap is not None:
        unit = min(unit, nodes.min_gap)
    m = max(3, int(mp.ceil((hi - lo) / unit * points_per_gap)))
    grid = [lo + (hi - lo) * j / m for j in range(m + 1)]
    f = w.kernels
    if mode == "re":
        vals = [mp.re(f(x)) for x in grid]
        tol = 1024 * ctx.eps * f.coeff_scale()
        marks = []
        for j in range(m + 1):
            if abs(vals[j]) <= tol:
                marks.append(grid[j])
            elif j < m and abs(vals[j + 1]) > tol and (vals[j] > 0) != (vals[j + 1] > 0):
                marks.append(_bisect(lambda x: mp.re(f(x)), grid[j], grid[j + 1], vals[j], ctx))
        # exact zeros on the grid can be recorded twice through neighbouring tolerance
        marks = _dedupe(marks, (hi - lo) / m / 2)
        kind = "zero crossings"
    else:
        vals = [abs(f(x)) for x in grid]
        marks = []
        for j in range(1, m):
            if vals[j] > vals[j - 1] and vals[j] >= vals[j + 1]:
                h = grid[j + 1] - grid[j]
                den = vals[j - 1] - 2 * vals[j] + vals[j + 1]
                off = 0 if den == 0 else h * (vals[j - 1] - vals[j + 1]) / (2 * den)
                marks.append(grid[j] + off)
        kind = "maxima of |psi|"
    if len(marks) < 3:
        raise ValueError(f"interval not oscillatory: found {len(marks)} {kind}, need at least 3")
    return 2 * (marks[-1] - marks[0]) / (len(marks) - 1)


def _bisect(g, a, b, ga, ctx, iters=None):
    mp = ctx.mp
    iters = iters or min(ctx.bits, 200)
    for _ in range(iters):
        mid = (a + b) / 2
        gm = g(mid)
        if gm == 0:
            return mid
        if (gm > 0) == (ga > 0):
            a, ga = mid, gm
        else:
            b = mid
        if b - a <= 4 * ctx.eps * max(abs(a), abs(b), mp.one):
            break
    return (a + b) / 2


def _dedupe(points, gap):
    out = []
    for x in sorted(points):
        if not out or x - out[-1] > gap:
            out.append(x)
    return out


def parseval_norm_sq(w: Wavefunction, order: int = 24):
    """``int_{-p_max}^{p_max} |psi~(p)|^2 dp`` by composite Gauss-Legendre."""
    ctx = w.ctx
    mp = ctx.mp
    nodes = w.nodes
    # |psi~|^2 only depends on node differences; centring keeps the phases small
    xc = (nodes.xs[0] + nodes.xs[-1]) / 2
    shifted = [x - xc for x in nodes.xs]
    span = nodes.xs[-1] - nodes.xs[0]
    cycles = span * nodes.p_max / (mp.pi * nodes.hbar)
    panels = 2 + int(mp.ceil(2 * cycles))
    edges = panel_edges(-nodes.p_max, nodes.p_max, 2 * nodes.p_max / panels)
    ps, ws = composite_nodes_mp(edges, order, ctx)
    total = mp.fsum(
        wt * abs(mp.fsum(c * mp.expj(-x * p / nodes.hbar) for x, c in zip(shifted, w.coeffs))) ** 2
        for p, wt in zip(ps, ws)
    )
    return total / (2 * mp.pi * nodes.hbar)


def position_norm_sq(w: Wavefunction, half_width=None, order: int = 24, tails: bool = True):
    """``int |psi(x)|^2 dx`` by quadrature on ``x_c +- half_width`` plus exact tails.

    ``half_width`` defaults to ``1000 * lambda_min``.  Panels are half a
    ``lambda_min`` wide away from the nodes and half the smallest node gap
    near them.  With ``tails`` the mass outside the quadrature range is added
    in closed form (sine and cosine integrals).
    """
    ctx = w.ctx
    mp = ctx.mp
    nodes = w.nodes
    lam = nodes.lambda_min
    L = 1000 * lam if half_width is None else ctx.mpf(half_width)
    xc = (nodes.xs[0] + nodes.xs[-1]) / 2
    lo, hi = xc - L, xc + L
    if not (lo < nodes.xs[0] and hi > nodes.xs[-1]):
        raise ValueError("quadrature range must contain all nodes")
    fine = lam / 2 if nodes.min_gap is None else min(lam / 2, nodes.min_gap / 2)
    near_lo = max(lo, nodes.xs[0] - lam)
    near_hi = min(hi, nodes.xs[-1] + lam)
    edges = panel_edges(lo, near_lo, lam / 2)[:-1] + panel_edges(near_lo, near_hi, fine)[:-1] \
        + panel_edges(near_hi, hi, lam / 2)
    xs, ws = composite_nodes_mp(edges, order, ctx)
    f = w.kernels
    total = mp.fsum(wt * abs(f(x)) ** 2 for x, wt in zip(xs, ws))
    if tails:
        total += tail_mass(w.kernels, hi, side=+1) + tail_mass(w.kernels, lo, side=-1)
    return total


def tail_mass(f: KernelSum, edge, side: int):
    """``int |f|^2`` over ``[edge, inf)`` (side=+1) or ``(-inf, edge]`` (side=-1).

    ``edge`` must lie beyond every kernel centre on that side.
    """
    mp = f.ctx.mp
    a = f.p_max / f.hbar
    centers = list(f.centers) if side > 0 else [-x for x in f.centers]
    L = edge if side > 0 else -edge
    if not all(L > x for x in centers):
        raise ValueError("tail edge must lie beyond all kernel centres")
    coeffs = f.coeffs
    n = len(centers)
    terms = []
    for r in range(n):
        terms.append(abs(coeffs[r]) ** 2 * sinc_product_tail(centers[r], centers[r], a, L, mp))
        for s in range(r + 1, n):
            cross = mp.re(mp.conj(coeffs[r]) * coeffs[s])
            if cross != 0:
                terms.append(2 * cross * sinc_product_tail(centers[r], centers[s], a, L, mp))
    return mp.fsum(terms)


def inner_product(f, g):
    """``<f, g> = int conj(f) g dx`` for kernel sums sharing a cutoff.

    Uses the reproducing property ``int k(x-u) k(x-v) dx = k(u-v)``.
    """
    f = f.kernels if isinstance(f, Wavefunction) else f
    g = g.kernels if isinstance(g, Wavefunction) else g
    mp = f.ctx.mp
    return mp.fsum(
        mp.conj(cf) * cg * f.kernel(xf - xg)
        for xf, cf in zip(f.centers, f.coeffs)
        for xg, cg in zip(g.centers, g.coeffs)
    )


# --- serialization ---------------------------------------------------------

def _cstr(ctx, z):
    mp = ctx.mp
    return [ctx.tostr(mp.re(z)), ctx.tostr(mp.im(z))]


def to_json(w: Wavefunction) -> dict:
    """JSON-ready document; every number is a full-precision decimal string."""
    ctx = w.ctx
    nodes = w.nodes
    return {
        "format": WAVEFUNCTION_FORMAT,
        "bits": ctx.bits,
        "guard_bits": ctx.guard_bits,
        "p_max": ctx.tostr(nodes.p_max),
        "hbar": ctx.tostr(nodes.hbar),
        "nodes": [ctx.tostr(x) for x in nodes.xs],
        "amps": [_cstr(ctx, a) for a in nodes.amps],
        "coeffs": [_cstr(ctx, c) for c in w.coeffs],
        "norm_sq": ctx.tostr(w.norm_sq),
    }


def from_json(doc) -> Wavefunction:
    """Rebuild a :class:`Wavefunction` from :func:`to_json` output (dict or str)."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    if doc.get("format") != WAVEFUNCTION_FORMAT:
        raise ValueError(f"not a wave function document (format={doc.get('format')!r})")
    ctx = PrecisionContext(int(doc["bits"]), guard_bits=int(doc.get("guard_bits", 0)))

    def cplx(pair):
        re, im = (ctx.mpf(s) for s in pair)
        return re if im == 0 else ctx.mp.mpc(re, im)

    nodes = NodeSpec.create(doc["nodes"], [cplx(a) for a in doc["amps"]],
                            doc["p_max"], doc["hbar"], ctx)
    coeffs = tuple(cplx(c) for c in doc["coeffs"])
    return Wavefunction(nodes, coeffs, ctx.mpf(doc["norm_sq"]), build_prolate(nodes, ctx))
