"""Sweeps of the smallest prolate eigenvalue and the two amplitude laws.

At fixed node count ``N`` the maximal amplitude scales like
``s_min**0.5 ~ dx**(N-1)``; at fixed spacing it scales like
``N**0.25 * exp(-gamma*N/2)``.  Both are fitted on ``s_min`` directly, so
the expected exponents are ``2(N-1)`` and ``gamma``.
"""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .prolate import NodeSpec, build_prolate, quadratic_form_inv, smallest_eigenpair, alternating
from .xprec import DEFAULT_GUARD_BITS, PrecisionContext, PrecisionError, estimate_required_bits

__all__ = [
    "SweepConfig",
    "ScalingReport",
    "LinearFit",
    "sweep_dx",
    "sweep_N",
    "smin_point",
    "fit_line",
    "geometric_grid",
]

MODES = ("fixed_N_vary_dx", "fixed_dx_vary_N")
SOURCES = ("smin_eigenvector", "alternating")


def geometric_grid(hi, lo, count):
    """``count`` ratios from ``hi`` down to ``lo``, equally spaced in log."""
    return [float(v) for v in np.geomspace(hi, lo, count)]


@dataclass
class SweepConfig:
    """One sweep.  Spacings are given as ratios ``dx / lambda_min``."""

    mode: str
    fixed: float
    grid: List[float]
    p_max: str = "pi"
    hbar: str = "1"
    source: str = "smin_eigenvector"
    guard_bits: int = DEFAULT_GUARD_BITS
    max_bits: int = 4096
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}")
        if len(self.grid) < 4:
            raise ValueError("a sweep grid needs at least 4 points")
        ratios = self.grid if self.mode == "fixed_N_vary_dx" else [self.fixed]
        if any(not 0 < float(r) < 0.5 for r in ratios):
            raise ValueError("every spacing must lie strictly below lambda_min/2")
        if self.mode == "fixed_dx_vary_N":
            ns = [int(n) for n in self.grid]
            if ns != sorted(ns) or ns[0] < 2 or len(set(ns)) != len(ns):
                raise ValueError("N grid must be ascending, distinct and >= 2")
        elif int(self.fixed) < 1:
            raise ValueError("N must be >= 1")


@dataclass
class LinearFit:
    slope: float
    intercept: float
    r2: float
    max_residual: float
    n_points: int


@dataclass
class ScalingReport:
    config: SweepConfig
    grid: list
    s_min: list                 # decimal strings
    bits_used: list
    wall_time: list
    complete: bool
    fit: Optional[LinearFit] = None
    exponent: Optional[float] = None     # sweep_dx: slope of log s_min vs log dx
    gamma: Optional[float] = None        # sweep_N: decay rate
    fit_uncorrected: Optional[LinearFit] = None
    gamma_front: Optional[float] = None
    gamma_back: Optional[float] = None
    failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d["config"] = asdict(self.config)
        return d

    def to_csv(self, timing: bool = False) -> str:
        """Columns ``parameter, s_min, bits_used, wall_time``.

        ``wall_time`` is left blank unless ``timing`` is set, keeping output
        byte-identical across runs.
        """
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["parameter", "s_min", "bits_used", "wall_time"])
        for g, s, b, t in zip(self.grid, self.s_min, self.bits_used, self.wall_time):
            wr.writerow([repr(g), s, b, f"{t:.6f}" if timing and t is not None else ""])
        return buf.getvalue()

    def dumps(self, timing: bool = False) -> str:
        d = self.to_json()
        if not timing:
            d["wall_time"] = [None] * len(self.wall_time)
        return json.dumps(d, indent=2, sort_keys=True)


def fit_line(x, y) -> LinearFit:
    """Equal-weight least squares ``y = slope*x + intercept``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2, float(np.max(np.abs(resid))), len(x))


def smin_point(n, ratio, p_max="pi", hbar="1", source="smin_eigenvector",
               guard_bits=DEFAULT_GUARD_BITS, max_bits=4096):
    """``(s_min string, log s_min, bits)`` for ``n`` nodes at spacing ``ratio*lambda_min``.

    With ``source="alternating"`` the reported quantity is the effective
    ``||a||^2 / (a^H S^{-1} a)`` for ``a_k = (-1)**k``, i.e. the squared
    normalized node amplitude per unit ``||a||``.
    """
    bits = estimate_required_bits(n, ratio, force=True) + guard_bits
    if bits > max_bits:
        raise PrecisionError(f"precision exhausted: {bits} bits needed, cap is {max_bits}")
    ctx = PrecisionContext(bits, guard_bits=guard_bits)
    mp = ctx.mp
    geo = NodeSpec.create([0], None, p_max, hbar, ctx)
    dx = ctx.mpf(ratio) * geo.lambda_min
    nodes = NodeSpec.create([k * dx for k in range(n)], None, p_max, hbar, ctx)
    P = build_prolate(nodes, ctx)
    if source == "smin_eigenvector":
        s, _ = smallest_eigenpair(P)
    else:
        a = alternating(n)
        s = n / quadratic_form_inv(P, a)
    return ctx.tostr(s), float(mp.log(s)), bits


def _point(args):
    n, ratio, cfg = args
    t0 = time.perf_counter()
    try:
        s, logs, bits = smin_point(n, ratio, cfg.p_max, cfg.hbar, cfg.source,
                                   cfg.guard_bits, cfg.max_bits)
        return s, logs, bits, time.perf_counter() - t0, None
    except (PrecisionError, ArithmeticError) as exc:
        return None, None, None, time.perf_counter() - t0, str(exc)


def _run(cfg, points):
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_point, [(n, r, cfg) for n, r in points]))
    return [_point((n, r, cfg)) for n, r in points]


def _report(cfg, results):
    rep = ScalingReport(cfg, list(cfg.grid), [], [], [], complete=True)
    for g, (s, _, bits, t, err) in zip(cfg.grid, results):
        rep.s_min.append(s)
        rep.bits_used.append(bits)
        rep.wall_time.append(t)
        if err is not None:
            rep.complete = False
            rep.failures.append({"parameter": g, "error": err})
    return rep


def sweep_dx(cfg: SweepConfig) -> ScalingReport:
    """``s_min`` over a spacing grid at fixed N; fits the log-log slope.

    Only the smallest decade of the grid (spacings within a factor 10 of the
    smallest) enters the fit, since the power law is asymptotic.
    """
    if cfg.mode != "fixed_N_vary_dx":
        raise ValueError("sweep_dx needs mode fixed_N_vary_dx")
    n = int(cfg.fixed)
    results = _run(cfg, [(n, r) for r in cfg.grid])
    rep = _report(cfg, results)
    ok = [(float(g), res[1]) for g, res in zip(cfg.grid, results) if res[1] is not None]
    dmin = min(g for g, _ in ok) if ok else None
    pts = [(g, y) for g, y in ok if g <= 10 * dmin * (1 + 1e-12)] if ok else []
    if len(pts) >= 2:
        rep.fit = fit_line(np.log([g for g, _ in pts]), [y for _, y in pts])
        rep.exponent = rep.fit.slope
    return rep


def sweep_N(cfg: SweepConfig) -> ScalingReport:
    """``s_min`` over an N grid at fixed spacing; fits ``log s_min - log(N)/2 = -gamma N + c``.

    Also reports the fit without the ``N**(1/2)`` correction, and gamma from
    the front and back halves of the grid (sharing the middle point when the
    grid length is odd).
    """
    if cfg.mode != "fixed_dx_vary_N":
        raise ValueError("sweep_N needs mode fixed_dx_vary_N")
    ns = [int(n) for n in cfg.grid]
    results = _run(cfg, [(n, cfg.fixed) for n in ns])
    rep = _report(cfg, results)
    ok = [(n, res[1]) for n, res in zip(ns, results) if res[1] is not None]
    if len(ok) >= 2:
        N = np.array([n for n, _ in ok], dtype=float)
        logs = np.array([y for _, y in ok])
        corrected = logs - 0.5 * np.log(N)
        rep.fit = fit_line(N, corrected)
        rep.gamma = -rep.fit.slope
        rep.fit_uncorrected = fit_line(N, logs)
        half = (len(N) + 1) // 2
        if half >= 2 and len(N) - half + 1 >= 2:
            rep.gamma_front = -fit_line(N[:half], corrected[:half]).slope
            rep.gamma_back = -fit_line(N[half - 1:], corrected[half - 1:]).slope
    return rep
