"""Extended-precision arithmetic context and dense symmetric linear algebra.

Every other module does its arithmetic through a :class:`PrecisionContext`,
which owns a private :class:`mpmath.MPContext`.  Values created by one
context carry its precision, so independent contexts never interfere and
no global ``mp.prec`` state is touched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
from mpmath.libmp import repr_dps, to_str

__all__ = [
    "PrecisionContext",
    "SymMatrix",
    "PrecisionError",
    "NotSPDError",
    "ConvergenceError",
    "estimate_required_bits",
    "cholesky_factor",
    "cholesky_solve",
    "sym_eigen",
    "DEFAULT_GUARD_BITS",
]

MIN_BITS = 64
DEFAULT_GUARD_BITS = 32


class PrecisionError(ArithmeticError):
    """Working precision is too low for the requested computation."""


class NotSPDError(PrecisionError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class PrecisionContext:
    """Binary working precision plus the tolerances derived from it.

    ``bits`` is the total significand precision used for all arithmetic;
    ``guard_bits`` records how many of those were added on top of an
    estimated requirement (metadata only).
    """

    bits: int
    guard_bits: int = 0
    mp: mpmath.ctx_mp.MPContext = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < MIN_BITS:
            raise ValueError(f"bits must be an integer >= {MIN_BITS}, got {self.bits!r}")
        if self.guard_bits < 0:
            raise ValueError("guard_bits must be non-negative")
        ctx = mpmath.MPContext()
        ctx.prec = int(self.bits)
        object.__setattr__(self, "mp", ctx)

    @classmethod
    def auto(cls, n, dx_over_lambda, guard_bits=DEFAULT_GUARD_BITS):
        """Context sized by :func:`estimate_required_bits` plus guard bits.

        Spacings at or above the Nyquist ratio fall back to the minimum.
        """
        return cls(estimate_required_bits(n, dx_over_lambda, force=True) + guard_bits,
                   guard_bits=guard_bits)

    @property
    def eps(self):
        """Unit roundoff ``2**(1 - bits)``, exact."""
        return self.mp.ldexp(self.mp.mpf(1), 1 - self.bits)

    @property
    def digits(self) -> int:
        """Decimal digits that round-trip a value at this precision."""
        return repr_dps(self.bits)

    @property
    def pi(self):
        return +self.mp.pi

    def mpf(self, value):
        return self.mp.mpf(self.convert(value))

    def mpc(self, re, im=0):
        return self.mp.mpc(self.convert(re), self.convert(im))

    def convert(self, value):
        """Convert ``value`` to an mpf/mpc of this context.

        Strings are parsed as decimals at full precision (``"pi"`` and simple
        ``"k*pi"``/``"pi/k"`` forms are accepted); Fractions are rounded once.
        """
        mp = self.mp
        if isinstance(value, str):
            return parse_number(value, self)
        if isinstance(value, Fraction):
            return mp.mpf(value.numerator) / value.denominator
        if isinstance(value, complex) or hasattr(value, "_mpc_"):
            return mp.mpc(value)
        return mp.mpf(value)

    def tostr(self, value) -> str:
        """Full-precision decimal string (round-trips through :meth:`mpf`)."""
        x = self.mp.mpf(value)
        return to_str(x._mpf_, self.digits)

    def close(self, a, b, tol) -> bool:
        return abs(a - b) <= tol


def parse_number(text: str, ctx: PrecisionContext):
    """Parse a decimal string, optionally multiplied or divided by ``pi``."""
    mp = ctx.mp
    s = text.strip().lower().replace(" ", "")
    if not s:
        raise ValueError("empty numeric literal")
    if "pi" not in s:
        try:
            return mp.mpf(s)
        except (ValueError, TypeError) as exc:
            raise ValueError(f"not a decimal number: {text!r}") from exc
    sign = -1 if s.startswith("-") else 1
    s = s.lstrip("+-")
    if s == "pi":
        return sign * mp.pi
    if s.startswith("pi/"):
        return sign * mp.pi / mp.mpf(s[3:])
    if s.endswith("*pi"):
        return sign * mp.mpf(s[:-3]) * mp.pi
    if s.endswith("pi"):
        return sign * mp.mpf(s[:-2]) * mp.pi
    raise ValueError(f"unsupported numeric literal: {text!r}")


def estimate_required_bits(n: int, dx_over_lambda, force: bool = False) -> int:
    """Working bits needed for an ``n``-node prolate matrix.

    The smallest eigenvalue falls like ``ratio**(2(n-1))`` at small spacing
    ratio ``dx/lambda_min``, so ``log2 cond(S)`` is bounded by
    ``2(n-1) log2(1/ratio)``; 64 bits are kept on top of that.

    Ratios at or above 1/2 are outside the superoscillatory regime and raise,
    unless ``force`` is set, in which case 64 is returned.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    r = float(dx_over_lambda) if n > 1 else 0.25
    if not r > 0:
        raise ValueError("dx_over_lambda must be positive")
    if r >= 0.5:
        if force:
            return MIN_BITS
        raise ValueError("not superoscillatory regime: spacing at or above Nyquist")
    if n == 1:
        return MIN_BITS
    return MIN_BITS + math.ceil(2 * (n - 1) * math.log2(1.0 / r))


class SymMatrix:
    """Immutable symmetric matrix; only the lower triangle is stored."""

    __slots__ = ("n", "_rows")

    def __init__(self, n: int, lower: Sequence[Sequence]):
        if len(lower) != n or any(len(row) != i + 1 for i, row in enumerate(lower)):
            raise ValueError("lower triangle has wrong shape")
        self.n = n
        self._rows = tuple(tuple(row) for row in lower)

    @classmethod
    def from_function(cls, n, entry):
        """Build from ``entry(i, j)`` evaluated for ``j <= i`` only."""
        return cls(n, [[entry(i, j) for j in range(i + 1)] for i in range(n)])

    @classmethod
    def from_rows(cls, rows):
        n = len(rows)
        return cls(n, [[rows[i][j] for j in range(i + 1)] for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self._rows[i][j] if j <= i else self._rows[j][i]

    def __len__(self):
        return self.n

    def diagonal(self):
        return [self._rows[i][i] for i in range(self.n)]

    def to_rows(self):
        return [[self[i, j] for j in range(self.n)] for i in range(self.n)]

    def matvec(self, v):
        n = self.n
        return [sum((self[i, j] * v[j] for j in range(n)), 0 * v[0]) for i in range(n)]

    def norm_inf(self):
        return max(sum(abs(self[i, j]) for j in range(self.n)) for i in range(self.n))

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


def cholesky_factor(S: SymMatrix, ctx: PrecisionContext):
    """Lower-triangular ``L`` with ``S = L L^T``, as a list of rows."""
    mp = ctx.mp
    n = S.n
    L = [[mp.zero] * (i + 1) for i in range(n)]
    for j in range(n):
        d = mp.mpf(S[j, j]) - mp.fsum(L[j][k] ** 2 for k in range(j))
        if d <= 0:
            raise NotSPDError(
                f"matrix not numerically SPD at current precision; raise bits "
                f"(pivot {j} = {mp.nstr(d, 5)} at {ctx.bits} bits)"
            )
        ljj = mp.sqrt(d)
        L[j][j] = ljj
        for i in range(j + 1, n):
            s = mp.mpf(S[i, j]) - mp.fsum(L[i][k] * L[j][k] for k in range(j))
            L[i][j] = s / ljj
    return L


def cholesky_solve(S: SymMatrix, b: Sequence, ctx: PrecisionContext, factor=None):
    """Solve ``S y = b`` for SPD ``S``; ``b`` may be real or complex.

    Pass a precomputed ``factor`` from :func:`cholesky_factor` to reuse it.
    """
    n = S.n
    if len(b) != n:
        raise ValueError(f"dimension mismatch: S is {n}x{n}, b has {len(b)} entries")
    mp = ctx.mp
    L = cholesky_factor(S, ctx) if factor is None else factor
    y = [ctx.convert(v) for v in b]
    for i in range(n):
        acc = y[i]
        for k in range(i):
            acc -= L[i][k] * y[k]
        y[i] = acc / L[i][i]
    for i in reversed(range(n)):
        acc = y[i]
        for k in range(i + 1, n):
            acc -= L[k][i] * y[k]
        y[i] = acc / L[i][i]
    return y


def sym_eigen(S: SymMatrix, ctx: PrecisionContext, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    ``eigenvectors[k]`` the unit vector belonging to ``eigenvalues[k]``.
    Sweeps stop once the off-diagonal Frobenius mass drops below
    ``n**2 * eps * ||S||_F``.
    """
    mp = ctx.mp
    n = S.n
    A = [[mp.mpf(S[i, j]) for j in range(n)] for i in range(n)]
    V = [[mp.one if i == j else mp.zero for j in range(n)] for i in range(n)]
    eps = ctx.eps
    fro = mp.sqrt(mp.fsum(A[i][j] ** 2 for i in range(n) for j in range(n)))
    target = n * n * eps * fro

    def offmass():
        return mp.sqrt(2 * mp.fsum(A[i][j] ** 2 for i in range(n) for j in range(i)))

    sweeps = 0
    while n > 1 and offmass() >= target:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal mass {mp.nstr(offmass(), 5)}, target {mp.nstr(target, 5)})"
            )
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p][q]
                if apq == 0 or abs(apq) <= eps * mp.sqrt(abs(A[p][p] * A[q][q])) / 4:
                    A[p][q] = A[q][p] = mp.zero
                    continue
                theta = (A[q][q] - A[p][p]) / (2 * apq)
                t = 1 / (abs(theta) + mp.sqrt(theta * theta + 1))
                if theta < 0:
                    t = -t
                c = 1 / mp.sqrt(t * t + 1)
                s = t * c
                tau = s / (1 + c)
                A[p][p] -= t * apq
                A[q][q] += t * apq
                A[p][q] = A[q][p] = mp.zero
                for r in range(n):
                    if r != p and r != q:
                        arp, arq = A[r][p], A[r][q]
                        A[r][p] = A[p][r] = arp - s * (arq + tau * arp)
                        A[r][q] = A[q][r] = arq + s * (arp - tau * arq)
                for r in range(n):
                    vrp, vrq = V[r][p], V[r][q]
                    V[r][p] = vrp - s * (vrq + tau * vrp)
                    V[r][q] = vrq + s * (vrp - tau * vrq)
    order = sorted(range(n), key=lambda k: A[k][k])
    values = [A[k][k] for k in order]
    vectors = [[V[r][k] for r in range(n)] for k in order]
    return values, vectors
