"""Prolate (sinc Gram) matrix of a set of interpolation nodes."""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional, Sequence

from .xprec import (
    PrecisionContext,
    PrecisionError,
    SymMatrix,
    cholesky_factor,
    cholesky_solve,
    estimate_required_bits,
    sym_eigen,
)

__all__ = [
    "NodeSpec",
    "ProlateMatrix",
    "build_prolate",
    "smallest_eigenpair",
    "quadratic_form_inv",
    "alternating",
]


def alternating(n):
    """The amplitude pattern ``a_k = (-1)**k``."""
    return [(-1) ** k for k in range(n)]


@dataclass(frozen=True)
class NodeSpec:
    """Interpolation nodes, prescribed amplitudes and the momentum cutoff.

    Values are held as mpf/mpc numbers of ``ctx``.  ``amps`` may be ``None``
    for a geometry-only spec (see :func:`superosc.synth.maximal_superoscillation`).
    """

    xs: tuple
    amps: Optional[tuple]
    p_max: object
    hbar: object
    ctx: PrecisionContext

    @classmethod
    def create(cls, xs, amps=None, p_max="pi", hbar=1, ctx=None):
        if ctx is None:
            raise TypeError("a PrecisionContext is required")
        xs = tuple(ctx.mpf(x) for x in xs)
        if amps is not None:
            amps = tuple(ctx.convert(a) for a in amps)
        spec = cls(xs, amps, ctx.mpf(p_max), ctx.mpf(hbar), ctx)
        spec.validate()
        return spec

    @classmethod
    def equispaced(cls, n, dx, amps=None, p_max="pi", hbar=1, ctx=None, x0=0):
        """Nodes ``x_k = x0 + k*dx`` for ``k = 0..n-1``.

        ``amps`` may be a sequence or the string ``"alternating"``.
        """
        if ctx is None:
            raise TypeError("a PrecisionContext is required")
        dx = ctx.mpf(dx)
        x0 = ctx.mpf(x0)
        if isinstance(amps, str):
            if amps != "alternating":
                raise ValueError(f"unknown amplitude pattern {amps!r}")
            amps = alternating(n)
        return cls.create([x0 + k * dx for k in range(n)], amps, p_max, hbar, ctx)

    def validate(self):
        n = len(self.xs)
        if n < 1:
            raise ValueError("at least one node is required")
        if not self.p_max > 0:
            raise ValueError("p_max must be positive")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        tiny = self.ctx.mp.ldexp(self.lambda_min, -(self.ctx.bits // 2))
        for left, right in zip(self.xs, self.xs[1:]):
            if right - left <= tiny:
                if right - left < -tiny:
                    raise ValueError("node positions must be strictly increasing")
                raise ValueError("coincident constraint points")
        if self.amps is not None:
            if len(self.amps) != n:
                raise ValueError(f"{len(self.amps)} amplitudes given for {n} nodes")
            if all(a == 0 for a in self.amps):
                raise ValueError("amplitudes must not all be zero")

    @property
    def n(self) -> int:
        return len(self.xs)

    @property
    def lambda_min(self):
        """Shortest Fourier wavelength ``2*pi*hbar/p_max``."""
        return 2 * self.ctx.mp.pi * self.hbar / self.p_max

    @property
    def min_gap(self):
        if self.n < 2:
            return None
        return min(b - a for a, b in zip(self.xs, self.xs[1:]))

    def spacing_ratio(self):
        """Smallest node gap in units of ``lambda_min`` (``None`` for one node)."""
        gap = self.min_gap
        return None if gap is None else gap / self.lambda_min

    def required_bits(self) -> int:
        ratio = self.spacing_ratio()
        return estimate_required_bits(self.n, 0.25 if ratio is None else ratio, force=True)

    def with_amps(self, amps):
        return NodeSpec.create(self.xs, amps, self.p_max, self.hbar, self.ctx)

    def with_context(self, ctx: PrecisionContext):
        return NodeSpec.create(self.xs, self.amps, self.p_max, self.hbar, ctx)

    def kernel(self, u):
        """``sin(u p_max/hbar) / (pi u)`` with its analytic value at ``u = 0``."""
        mp = self.ctx.mp
        if u == 0:
            return self.p_max / (mp.pi * self.hbar)
        return mp.sin(u * self.p_max / self.hbar) / (mp.pi * u)


class ProlateMatrix:
    """The matrix ``S`` with factorization and spectrum computed on demand.

    Lazily computed members are initialised once under a lock, so concurrent
    readers see either nothing or the complete result.
    """

    def __init__(self, S: SymMatrix, nodes: NodeSpec, ctx: PrecisionContext):
        self.S = S
        self.nodes = nodes
        self.ctx = ctx
        self._lock = threading.Lock()
        self._chol = None
        self._spectrum = None

    @property
    def n(self):
        return self.S.n

    @property
    def chol(self):
        if self._chol is None:
            with self._lock:
                if self._chol is None:
                    self._chol = cholesky_factor(self.S, self.ctx)
        return self._chol

    @property
    def spectrum(self):
        if self._spectrum is None:
            with self._lock:
                if self._spectrum is None:
                    self._spectrum = sym_eigen(self.S, self.ctx)
        return self._spectrum

    def solve(self, b):
        return cholesky_solve(self.S, b, self.ctx, factor=self.chol)


def build_prolate(nodes: NodeSpec, ctx: Optional[PrecisionContext] = None) -> ProlateMatrix:
    """Entries ``sin((x_k - x_r) p_max/hbar) / (pi (x_k - x_r))``, diagonal ``p_max/(pi hbar)``."""
    ctx = nodes.ctx if ctx is None else ctx
    if ctx is not nodes.ctx:
        nodes = nodes.with_context(ctx)
    mp = ctx.mp
    xs = nodes.xs
    diag = nodes.p_max / (mp.pi * nodes.hbar)
    w = nodes.p_max / nodes.hbar

    def entry(i, j):
        if i == j:
            return diag
        d = xs[i] - xs[j]
        return mp.sin(d * w) / (mp.pi * d)

    return ProlateMatrix(SymMatrix.from_function(nodes.n, entry), nodes, ctx)


def smallest_eigenpair(P: ProlateMatrix):
    """``(s_min, v)`` with ``v`` real, unit length, largest entry positive.

    Raises :class:`PrecisionError` when ``s_min`` is not resolved above the
    eigensolver's absolute error at the working precision.
    """
    ctx = P.ctx
    mp = ctx.mp
    values, vectors = P.spectrum
    s_min, v = values[0], list(vectors[0])
    floor = 256 * P.n * ctx.eps * P.S.norm_inf()
    if s_min <= floor:
        raise PrecisionError(
            f"precision exhausted: s_min = {mp.nstr(s_min, 5)} is below the "
            f"resolvable floor {mp.nstr(floor, 5)} at {ctx.bits} bits; raise bits "
            f"(estimate: {P.nodes.required_bits()})"
        )
    norm = mp.sqrt(mp.fsum(x * x for x in v))
    v = [x / norm for x in v]
    vmax = max(abs(x) for x in v)
    # first index within rounding of the max decides ties deterministically
    lead = next(i for i, x in enumerate(v) if abs(x) >= vmax * (1 - 1024 * ctx.eps))
    if v[lead] < 0:
        v = [-x for x in v]
    return s_min, v


def quadratic_form_inv(P: ProlateMatrix, a: Sequence):
    """``a^H S^{-1} a`` via the Cholesky factor (never an explicit inverse)."""
    ctx = P.ctx
    mp = ctx.mp
    if len(a) != P.n:
        raise ValueError(f"amplitude vector has length {len(a)}, expected {P.n}")
    a = [ctx.convert(x) for x in a]
    y = P.solve(a)
    q = mp.fsum(mp.conj(ai) * yi for ai, yi in zip(a, y))
    scale = mp.fsum(abs(ai) * abs(yi) for ai, yi in zip(a, y))
    im = mp.im(q)
    if abs(im) > 1024 * P.n * ctx.eps * scale:
        raise PrecisionError(f"quadratic form has imaginary residue {mp.nstr(im, 5)}")
    return mp.re(q)
