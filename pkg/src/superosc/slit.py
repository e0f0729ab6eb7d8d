"""Hard-edged slit applied to a superoscillating wave function.

The wave function is cut to ``[x_lo, x_hi]``, renormalized, and Fourier
transformed; the emerging momentum distribution shows how much of the
particle's momentum now lies beyond the cutoff ``p_max``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import composite_nodes_mp, composite_nodes_np, panel_edges, sinc_window_transform
from .synth import Wavefunction, tail_mass

__all__ = [
    "SlitWindow",
    "SlitReport",
    "QuadratureError",
    "truncate_and_transform",
    "acceleration_summary",
    "report_csv",
    "report_header",
]

# GL order per panel, in position and in momentum
ORDER = 16
# beyond this window length the far stretches are integrated in closed form
_WIDE = 64
# padding (in lambda_min) around the node hull kept on quadrature panels
_PAD = 2


class QuadratureError(RuntimeError):
    def __init__(self, message, required_n_quad):
        super().__init__(f"{message}; use n_quad >= {required_n_quad}")
        self.required_n_quad = required_n_quad


@dataclass(frozen=True)
class SlitWindow:
    x_lo: object
    x_hi: object
    source: Wavefunction

    @classmethod
    def create(cls, source, x_lo, x_hi):
        ctx = source.ctx
        lo, hi = ctx.mpf(x_lo), ctx.mpf(x_hi)
        if not lo < hi:
            raise ValueError("slit window needs x_lo < x_hi")
        return cls(lo, hi, source)


@dataclass
class SlitReport:
    window: tuple
    captured_probability: object
    p_grid: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    expectation_abs_p: float
    fraction_above_cutoff: float
    p_max: float
    p_grid_max: float
    grid_mass: float
    tail_mass_bound: float
    quadrature_error: float
    n_quad: int
    node_amplitudes: list = field(default_factory=list, repr=False)

    @property
    def boost(self):
        """Factor by which renormalization raises the amplitudes inside the slit."""
        return 1 / math.sqrt(float(self.captured_probability))


def _plan(win, p_grid_max):
    w = win.source
    nodes = w.nodes
    lam = nodes.lambda_min
    lo, hi = win.x_lo, win.x_hi
    near = (lo, hi)
    far = []
    if hi - lo > (nodes.xs[-1] - nodes.xs[0]) + _WIDE * lam:
        a = max(lo, nodes.xs[0] - _PAD * lam)
        b = min(hi, nodes.xs[-1] + _PAD * lam)
        if a < b:
            near = (a, b)
            if lo < a:
                far.append((lo, a))
            if b < hi:
                far.append((b, hi))
        else:
            near = None
            far.append((lo, hi))
    return near, far


def truncate_and_transform(win: SlitWindow, p_grid_max=None, n_quad=None) -> SlitReport:
    """Momentum distribution of the slit-truncated, renormalized wave function.

    ``p_grid_max`` defaults to four times the superoscillation momentum scale
    ``pi*hbar/min_gap`` (or ``p_max`` for a single node).  ``n_quad`` is the
    number of Gauss-Legendre nodes over the quadrature part of the window and
    defaults to twice the minimum that keeps every panel below a quarter of
    the local wavelength.
    """
    w = win.source
    ctx = w.ctx
    mp = ctx.mp
    nodes = w.nodes
    hbar, p_max, lam = nodes.hbar, nodes.p_max, nodes.lambda_min
    gap = nodes.min_gap
    local_lam = lam if gap is None else min(lam, 2 * gap)
    p_scale = p_max if gap is None else max(p_max, mp.pi * hbar / gap)
    P = 4 * p_scale if p_grid_max is None else ctx.mpf(p_grid_max)
    if P < 4 * p_scale * (1 - 1e-12):
        raise ValueError(
            f"p_grid_max = {float(P):.6g} does not cover the distribution; "
            f"need at least {float(4 * p_scale):.6g}"
        )
    if P <= p_max:
        raise ValueError("p_grid_max must exceed p_max")

    near, far = _plan(win, P)
    f = w.kernels

    # position-space samples on the quadrature part
    xs_np = np.zeros(0)
    ws_np = np.zeros(0)
    vals = []
    mass = mp.zero
    qerr = mp.zero
    used = 0
    if near is not None:
        a, b = near
        h_max = min(local_lam / 4, 2 * mp.pi * hbar / P)
        required = ORDER * max(1, int(mp.ceil((b - a) / h_max)))
        if n_quad is None:
            n_quad = 2 * required
        if n_quad < required:
            raise QuadratureError(
                f"n_quad = {n_quad} leaves panels wider than a quarter local wavelength", required)
        panels = int(math.ceil(n_quad / ORDER))
        edges = panel_edges(a, b, (b - a) / panels)
        xq, wq = composite_nodes_mp(edges, ORDER, ctx)
        vals = [f(x) for x in xq]
        mass = mp.fsum(wt * abs(v) ** 2 for v, wt in zip(vals, wq))
        xh, wh = composite_nodes_mp(edges, ORDER // 2, ctx)
        mass_half = mp.fsum(wt * abs(f(x)) ** 2 for x, wt in zip(xh, wh))
        qerr = abs(mass - mass_half)
        used = len(xq)
        xs_np = np.array([float(x) for x in xq])
        ws_np = np.array([float(x) for x in wq])
    else:
        n_quad = 0

    far_mass = mp.zero
    for a, b in far:
        side = 1 if a >= nodes.xs[-1] else -1
        if side > 0:
            far_mass += tail_mass(f, a, +1) - tail_mass(f, b, +1)
        else:
            far_mass += tail_mass(f, b, -1) - tail_mass(f, a, -1)
    total = mass + far_mass
    captured = total / w.norm_sq
    if not captured > 1024 * ctx.eps:
        raise ValueError(
            f"slit misses wave function: captured probability {mp.nstr(captured, 5)} "
            f"is indistinguishable from zero at {ctx.bits} bits"
        )
    if near is not None and qerr > 1e-6 * total:
        raise QuadratureError(
            f"estimated quadrature error {mp.nstr(qerr / total, 3)} of captured mass exceeds 1e-6",
            2 * n_quad)

    # momentum grid: panels resolve the window's own oscillation in p
    width = max((near[1] - near[0]) if near is not None else lam, lam)
    h_p = 2 * mp.pi * hbar / (4 * width)
    pf, pmaxf = float(P), float(p_max)
    p_edges = panel_edges(-pf, pf, float(h_p), breaks=(-pmaxf, pmaxf))
    p, pw = composite_nodes_np(p_edges, ORDER)

    inv = 1 / mp.sqrt(total)
    amp = np.zeros(len(p), dtype=complex)
    if len(vals):
        vnp = np.array([complex(v * inv) for v in vals])
        hb = float(hbar)
        # fixed summation order keeps results independent of scheduling
        for lo_i in range(0, len(p), 512):
            ph = np.exp(-1j * np.outer(p[lo_i:lo_i + 512], xs_np) / hb)
            amp[lo_i:lo_i + 512] = ph @ (ws_np * vnp)
    if far:
        amp += _far_transform(w, far, p, inv)
    amp /= math.sqrt(2 * math.pi * float(hbar))
    dens = np.abs(amp) ** 2
    grid_mass = float(np.dot(pw, dens))
    dens = dens / grid_mass
    e_abs = float(np.dot(pw, np.abs(p) * dens))
    above = float(np.dot(pw[np.abs(p) > pmaxf], dens[np.abs(p) > pmaxf]))
    k = ORDER
    c_env = float(np.max(dens[-k:] * p[-k:] ** 2) + np.max(dens[:k] * p[:k] ** 2))
    tail_bound = c_env / pf

    inside = [(x, a_k) for x, a_k in zip(nodes.xs, nodes.amps) if win.x_lo <= x <= win.x_hi]
    node_amps = [(x, a_k * inv) for x, a_k in inside]
    return SlitReport(
        window=(win.x_lo, win.x_hi),
        captured_probability=captured,
        p_grid=p,
        weights=pw,
        density=dens,
        expectation_abs_p=e_abs,
        fraction_above_cutoff=above,
        p_max=pmaxf,
        p_grid_max=pf,
        grid_mass=grid_mass,
        tail_mass_bound=tail_bound,
        quadrature_error=float(qerr / total) if near is not None else 0.0,
        n_quad=used,
        node_amplitudes=node_amps,
    )


def _far_transform(w, segments, p, inv):
    """Closed-form transform of ``psi`` over long far-field stretches."""
    mp = w.ctx.mp
    nodes = w.nodes
    hbar = nodes.hbar
    a = nodes.p_max / hbar
    out = np.zeros(len(p), dtype=complex)
    for j, pj in enumerate(p):
        q = mp.mpf(float(pj)) / hbar
        acc = mp.mpc(0)
        for lo, hi in segments:
            for xr, c in zip(nodes.xs, w.coeffs):
                k = sinc_window_transform(q, a, lo - xr, hi - xr, mp)
                acc += c * mp.expj(-q * xr) * k
        out[j] = complex(acc * inv)
    return out


def window_transform_exact(w: Wavefunction, x_lo, x_hi, p):
    """``int_{x_lo}^{x_hi} psi(x) exp(-i p x/hbar) dx / sqrt(2 pi hbar)`` in closed form."""
    ctx = w.ctx
    mp = ctx.mp
    nodes = w.nodes
    q = ctx.mpf(p) / nodes.hbar
    a = nodes.p_max / nodes.hbar
    lo, hi = ctx.mpf(x_lo), ctx.mpf(x_hi)
    acc = mp.fsum(
        c * mp.expj(-q * xr) * sinc_window_transform(q, a, lo - xr, hi - xr, mp)
        for xr, c in zip(nodes.xs, w.coeffs)
    )
    return acc / mp.sqrt(2 * mp.pi * nodes.hbar)


def acceleration_summary(report: SlitReport, nodes) -> dict:
    """Compare the emerging ``<|p|>`` with the cutoff and the superoscillation scale."""
    mp = nodes.ctx.mp
    gap = nodes.min_gap
    scale = None if gap is None else float(mp.pi * nodes.hbar / gap)
    e = report.expectation_abs_p
    return {
        "expectation_abs_p": e,
        "p_max": report.p_max,
        "ratio_to_cutoff": e / report.p_max,
        "superoscillation_momentum": scale,
        "ratio_to_superoscillation": None if scale is None else e / scale,
        "fraction_above_cutoff": report.fraction_above_cutoff,
        "self_acceleration": e > report.p_max,
    }


def report_header(report: SlitReport, ctx) -> dict:
    return {
        "window": [ctx.tostr(report.window[0]), ctx.tostr(report.window[1])],
        "captured_probability": ctx.tostr(report.captured_probability),
        "expectation_abs_p": repr(report.expectation_abs_p),
        "fraction_above_cutoff": repr(report.fraction_above_cutoff),
        "p_max": repr(report.p_max),
        "p_grid_max": repr(report.p_grid_max),
        "grid_mass": repr(report.grid_mass),
        "tail_mass_bound": repr(report.tail_mass_bound),
        "quadrature_error": repr(report.quadrature_error),
        "n_quad": report.n_quad,
        "boost": repr(report.boost),
    }


def report_csv(report: SlitReport) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["p", "density", "weight"])
    for p, d, wt in zip(report.p_grid, report.density, report.weights):
        wr.writerow([repr(float(p)), repr(float(d)), repr(float(wt))])
    return buf.getvalue()


def dumps_header(report, ctx):
    return json.dumps(report_header(report, ctx), indent=2, sort_keys=True)
