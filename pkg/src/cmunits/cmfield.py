"""Imaginary quadratic fields, the hypotheses of the main construction, and
the finite groups that act on CM values through Shimura reciprocity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
from mpmath import mpc

from cmunits.bignum import DEFAULT_POLICY, DomainError, PrecisionPolicy
from cmunits.modfunc import GL2ModN

EXCLUDED_DISCRIMINANTS = (-3, -4)


class FieldError(DomainError):
    """Rejected discriminant."""


@dataclass(frozen=True)
class Violation:
    name: str
    reason: str


class HypothesisError(DomainError):
    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(f"{v.name}: {v.reason}" for v in self.violations))


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of |n|, ascending (trial division)."""
    n = abs(n)
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out.append(n)
    return out


def is_squarefree(n: int) -> bool:
    n = abs(n)
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        p += 1
    return n != 0


def is_fundamental(d: int) -> bool:
    if d % 4 == 1:
        return is_squarefree(d)
    if d % 4 == 0:
        return (d // 4) % 4 in (2, 3) and is_squarefree(d // 4)
    return False


def kronecker(d: int, p: int) -> int:
    """Kronecker symbol (d/p) for a prime p: +1 split, 0 ramified, -1 inert."""
    if p == 2:
        if d % 2 == 0:
            return 0
        return 1 if d % 8 in (1, 7) else -1
    a = d % p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def reduced_forms(d: int) -> list[tuple[int, int, int]]:
    """Primitive reduced positive definite forms (a, b, c) of discriminant d < 0.

    Reduced: |b| <= a <= c, and b >= 0 whenever |b| == a or a == c.
    """
    if d >= 0 or d % 4 not in (0, 1):
        raise DomainError(f"{d} is not a negative discriminant")
    forms = []
    a_max = math.isqrt(-d // 3)
    for a in range(1, a_max + 1):
        for b in range(-a + 1, a + 1):
            if (b * b - d) % (4 * a):
                continue
            c = (b * b - d) // (4 * a)
            if c < a:
                continue
            if b < 0 and a == c:
                continue
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            forms.append((a, b, c))
    return forms


def class_number(d: int) -> int:
    return len(reduced_forms(d))


@dataclass(frozen=True)
class IQField:
    d: int
    B: int
    C: int
    h: int

    def theta(self, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
        """theta_K = (d + sqrt(d)) / 2, a root of X^2 + B X + C."""
        with policy.context():
            return mpc(self.d, mpmath.sqrt(-self.d)) / 2

    def split_type(self, p: int) -> int:
        return kronecker(self.d, p)

    def is_prime_ideal_power(self, N: int) -> bool:
        """Whether N O_K is a power of a single prime ideal."""
        ps = prime_factors(N)
        if len(ps) != 1:
            return False
        return kronecker(self.d, ps[0]) != 1

    def __str__(self):
        return f"Q(sqrt({self.d}))"


def make_field(d: int) -> IQField:
    if d >= 0:
        raise FieldError(f"discriminant {d} is not negative")
    if not is_fundamental(d):
        raise FieldError(f"{d} is not a fundamental discriminant")
    if d in EXCLUDED_DISCRIMINANTS:
        raise FieldError(f"Q(sqrt({d})) is excluded (extra units)")
    return IQField(d=d, B=-d, C=(d * d - d) // 4, h=class_number(d))


@dataclass(frozen=True)
class ModulusParams:
    m: int
    n: int
    primes_m: tuple[int, ...] = field(default=())
    primes_mn: tuple[int, ...] = field(default=())

    @property
    def level(self) -> int:
        return self.m * self.n


def check_hypotheses(K: IQField, m: int, n: int) -> list[Violation]:
    out = []
    if m < 2 or n < 1:
        out.append(Violation("range", f"need m >= 2 and n >= 1 (got m={m}, n={n})"))
        return out
    pm = prime_factors(m)
    if len(pm) < 2:
        out.append(Violation("hypothesis_i", f"m = {m} has {len(pm)} distinct prime factor(s)"))
    bad = [p for p in prime_factors(m * n) if kronecker(K.d, p) != 1]
    if bad:
        kinds = {0: "ramified", -1: "inert"}
        desc = ", ".join(f"{p} {kinds[kronecker(K.d, p)]}" for p in bad)
        out.append(Violation("hypothesis_ii", f"primes of mn not split in {K}: {desc}"))
    return out


def validate(K: IQField, m: int, n: int) -> ModulusParams:
    violations = check_hypotheses(K, m, n)
    if violations:
        raise HypothesisError(violations)
    return ModulusParams(m, n, tuple(prime_factors(m)), tuple(prime_factors(m * n)))


@dataclass(frozen=True)
class WElement:
    """[[t - B s, -C s], [s, t]] modulo N."""

    t: int
    s: int
    N: int
    B: int
    C: int

    @property
    def det(self) -> int:
        t, s = self.t, self.s
        return (t * t - self.B * t * s + self.C * s * s) % self.N

    def matrix(self) -> GL2ModN:
        t, s = self.t, self.s
        return GL2ModN(t - self.B * s, -self.C * s, s, t, self.N)


def enumerate_W(K: IQField, N: int) -> list[WElement]:
    """One representative (lexicographically smallest of (t,s), (-t,-s)) per class."""
    if N < 2:
        raise DomainError("level must be >= 2")
    out = []
    for t in range(N):
        for s in range(N):
            if math.gcd((t * t - K.B * t * s + K.C * s * s) % N, N) != 1:
                continue
            if (t, s) <= ((-t) % N, (-s) % N):
                out.append(WElement(t, s, N, K.B, K.C))
    return out


def unit_group_order(d: int, N: int) -> int:
    """|(O_K / N O_K)^*| = N^2 prod_{p|N} (1 - 1/p)(1 - (d/p)/p)."""
    num, den = N * N, 1
    for p in prime_factors(N):
        num *= (p - 1) * (p - kronecker(d, p))
        den *= p * p
    return num // den


def enumerate_gal_LF(m: int, n: int) -> list[int]:
    """t in (Z/mnZ)^* with t = +-1 mod m, one per {t, -t}, smallest first."""
    mn = m * n
    return [t for t in range(1, mn // 2 + 1)
            if math.gcd(t, mn) == 1 and t % m in (1, m - 1)]
