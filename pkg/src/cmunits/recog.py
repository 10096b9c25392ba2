"""Integer lattice reduction and recognition of algebraic numbers.

``lll_reduce`` is the all-integer LLL (Gram-Schmidt data kept as the
integers d_i and lambda_ij of de Weger / Cohen), so reduction is exact on
big-integer bases.  ``algdep`` finds integer polynomials vanishing at a
complex number with the two-embedding lattice

    [ I_{d+1} | round(S Re x^i) | round(S Im x^i) ].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
from mpmath import mpc, mpf

from cmunits.bignum import DEFAULT_POLICY, PrecisionError, PrecisionPolicy

DEFAULT_DELTA = Fraction(99, 100)


class RankError(ValueError):
    """Basis rows are linearly dependent."""


@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial, coefficients in ascending degree."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(x) for x in self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        if len(c) < 2:
            raise ValueError("polynomial must have degree >= 1")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def primitive(cls, coeffs: Sequence[int]) -> "IntPolynomial":
        """Divide out the content and make the leading coefficient positive."""
        c = [int(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        g = 0
        for x in c:
            g = math.gcd(g, x)
        if g == 0:
            raise ValueError("zero polynomial")
        if c[-1] < 0:
            g = -g
        return cls(tuple(x // g for x in c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1]

    @property
    def constant(self) -> int:
        return self.coeffs[0]

    @property
    def height(self) -> int:
        return max(abs(x) for x in self.coeffs)

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def to_strings(self) -> list[str]:
        return [str(c) for c in self.coeffs]

    def __str__(self):
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            mono = "" if k == 0 else ("X" if k == 1 else f"X^{k}")
            coef = str(abs(c)) if (abs(c) != 1 or k == 0) else ""
            terms.append(("-" if c < 0 else "+") + " " + coef + mono)
        s = " ".join(terms)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]


def is_monic_integral(p: IntPolynomial) -> bool:
    return abs(p.leading) == 1


def is_unit_poly(p: IntPolynomial) -> bool:
    return is_monic_integral(p) and abs(p.constant) == 1


def _dot(u, v) -> int:
    return sum(a * b for a, b in zip(u, v))


def lll_reduce(basis: Sequence[Sequence[int]], delta: Fraction = DEFAULT_DELTA,
               return_transform: bool = False):
    """LLL-reduce the rows of an integer basis.

    Returns the reduced rows (and the unimodular U with U * basis = reduced
    when ``return_transform`` is set).  Raises :class:`RankError` on
    dependent rows.
    """
    delta = Fraction(delta)
    if not Fraction(1, 4) < delta < 1:
        raise ValueError("delta must lie in (1/4, 1)")
    b = [[int(x) for x in row] for row in basis]
    n = len(b)
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    if n == 0:
        return (b, U) if return_transform else b
    dn, dd = delta.numerator, delta.denominator
    # d[i + 1] is the Gram determinant of the first i + 1 rows; d[0] = 1
    d = [0] * (n + 1)
    d[0] = 1
    lam = [[0] * n for _ in range(n)]
    d[1] = _dot(b[0], b[0])
    if d[1] == 0:
        raise RankError("zero row in basis")

    def red(k, l):
        q2 = 2 * lam[k][l]
        if abs(q2) > d[l + 1]:
            r = (q2 + d[l + 1]) // (2 * d[l + 1])
            b[k] = [x - r * y for x, y in zip(b[k], b[l])]
            U[k] = [x - r * y for x, y in zip(U[k], U[l])]
            lam[k][l] -= r * d[l + 1]
            for i in range(l):
                lam[k][i] -= r * lam[l][i]

    def swap(k, kmax):
        b[k], b[k - 1] = b[k - 1], b[k]
        U[k], U[k - 1] = U[k - 1], U[k]
        for j in range(k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        B = (d[k - 1] * d[k + 1] + lm * lm) // d[k]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k + 1] * lam[i][k - 1] - lm * t) // d[k]
            lam[i][k - 1] = (B * t + lm * lam[i][k]) // d[k + 1]
        d[k] = B

    k, kmax = 1, 0
    while k < n:
        if k > kmax:
            kmax = k
            for j in range(k + 1):
                u = _dot(b[k], b[j])
                for i in range(j):
                    u = (d[i + 1] * u - lam[k][i] * lam[j][i]) // d[i]
                if j < k:
                    lam[k][j] = u
                else:
                    d[k + 1] = u
            if d[k + 1] == 0:
                raise RankError("basis rows are linearly dependent")
        red(k, k - 1)
        lm = lam[k][k - 1]
        if dd * d[k + 1] * d[k - 1] < dn * d[k] * d[k] - dd * lm * lm:
            swap(k, kmax)
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                red(k, l)
            k += 1
    return (b, U) if return_transform else b


@dataclass(frozen=True)
class Relation:
    poly: IntPolynomial
    residual: mpf  # |p(x)| / (H(p) * max(1, |x|)^deg)
    reliable: bool


def normalized_residual(p: IntPolynomial, x) -> mpf:
    mag = max(mpf(1), abs(x))
    return abs(p(x)) / (p.height * mag ** p.degree)


def _relation_at_degree(x: mpc, deg: int, policy: PrecisionPolicy) -> Relation | None:
    P, G = policy.working_bits, policy.guard_bits
    mag = max(mpf(1), abs(x))
    scale_bits = P - G - int(math.ceil(deg * float(mpmath.log(mag, 2))))
    if scale_bits < 16:
        raise PrecisionError(f"|x|^{deg} exceeds the working precision")
    S = mpmath.ldexp(mpf(1), scale_bits)
    powers = [mpc(1)]
    for _ in range(deg):
        powers.append(powers[-1] * x)
    re_col = [int(mpmath.nint(S * z.real)) for z in powers]
    im_col = [int(mpmath.nint(S * z.imag)) for z in powers]
    constraints = 2 if any(im_col) else 1
    rows = []
    for i in range(deg + 1):
        row = [int(i == j) for j in range(deg + 1)]
        row.append(re_col[i])
        if constraints == 2:
            row.append(im_col[i])
        rows.append(row)
    reduced = lll_reduce(rows)
    best = None
    for row in reduced:
        coeffs = row[: deg + 1]
        if not any(coeffs[1:]):
            continue
        p = IntPolynomial.primitive(coeffs)
        res = normalized_residual(p, x)
        if res >= policy.loose_tolerance:
            continue
        reliable = (p.degree + 1) * math.log2(p.height + 1) <= constraints * scale_bits / 2
        rel = Relation(p, res, reliable)
        if best is None or (rel.reliable, -p.height) > (best.reliable, -best.poly.height):
            best = rel
    return best


def algdep(x, max_deg: int, policy: PrecisionPolicy = DEFAULT_POLICY) -> IntPolynomial | None:
    """Primitive integer polynomial of least degree <= max_deg vanishing at x.

    A candidate must satisfy |p(x)| < 2^-(P/2) H(p) max(1,|x|)^deg and be
    far shorter than a chance lattice vector; if only chance-level
    candidates exist, :class:`PrecisionError` is raised.
    """
    if max_deg < 1:
        raise ValueError("max_deg must be >= 1")
    if policy.working_bits < 32 * max_deg:
        raise PrecisionError(f"need at least {32 * max_deg} bits for degree {max_deg}")
    unreliable = False
    with policy.context():
        x = mpc(x)
        for deg in range(1, max_deg + 1):
            rel = _relation_at_degree(x, deg, policy)
            if rel is None:
                continue
            if rel.reliable:
                return rel.poly
            unreliable = True
    if unreliable:
        raise PrecisionError("only chance-level integer relations found")
    return None


@dataclass(frozen=True)
class Recognition:
    poly: IntPolynomial
    residual: mpf
    bits: int
    verify_bits: int
    verify_residual: mpf


def recognize(value_at: Callable[[PrecisionPolicy], mpc], max_deg: int,
              policy: PrecisionPolicy = DEFAULT_POLICY, max_bits: int = 4096) -> Recognition | None:
    """Run algdep on value_at(policy), escalating precision, then re-verify at twice the precision.

    ``value_at`` must recompute the number from scratch at the precision it
    is given.  Returns None when nothing survives up to ``max_bits``.
    """
    bits = policy.working_bits
    while bits <= max_bits:
        pol = policy.with_bits(bits)
        x = value_at(pol)
        try:
            p = algdep(x, max_deg, pol)
        except PrecisionError:
            p = None
        if p is not None:
            pol2 = pol.scaled(2)
            x2 = value_at(pol2)
            with pol2.context():
                res2 = normalized_residual(p, x2)
            if res2 < pol2.loose_tolerance:
                with pol.context():
                    res = normalized_residual(p, x)
                return Recognition(p, res, bits, pol2.working_bits, res2)
        bits *= 2
    return None
