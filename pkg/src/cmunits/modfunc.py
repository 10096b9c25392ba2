"""Modular functions at points of the upper half-plane.

Conventions, all on the lattice ``[tau, 1]`` with ``q = e^{2 pi i tau}``:

* ``eta`` carries the prefactor ``sqrt(2 pi) * zeta_8``, so that
  ``eta**24 == g2**3 - 27*g3**2`` (the classical Dedekind value is
  :func:`dedekind_eta`, and ``Delta == (2 pi)^12 * dedekind_eta**24``).
* ``g2 = 60 sum' w^-4`` and ``g3 = 140 sum' w^-6``, evaluated from the
  normalized Eisenstein series ``E4, E6``.
* ``siegel`` is evaluated on the literal characteristic ``[r; s]``; it is
  only defined up to a root of unity modulo ``Z^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
from mpmath import mpc, mpf

from cmunits.bignum import (
    DEFAULT_POLICY,
    DomainError,
    PrecisionError,
    PrecisionPolicy,
    _check_tau,
    as_fraction,
    expjpi,
    frac_exp,
    rel_diff,
    terms_needed,
)

MIN_IM_TAU = 0.1


class ConsistencyError(ArithmeticError):
    """Two independent evaluation paths disagree."""


@dataclass(frozen=True)
class CharacterVector:
    """The characteristic [a/N; b/N] with (a, b) not both divisible by N.

    ``a`` and ``b`` are kept literally (any integers); ``canonical()`` reduces
    modulo Z^2 and to the primitive denominator.
    """

    a: int
    b: int
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise DomainError("denominator must be positive")
        if self.a % self.N == 0 and self.b % self.N == 0:
            raise DomainError(f"[{self.a}/{self.N}; {self.b}/{self.N}] lies in Z^2")

    @classmethod
    def from_fractions(cls, r, s) -> "CharacterVector":
        r, s = as_fraction(r), as_fraction(s)
        n = math.lcm(r.denominator, s.denominator)
        return cls(int(r * n), int(s * n), n)

    @property
    def r(self) -> Fraction:
        return Fraction(self.a, self.N)

    @property
    def s(self) -> Fraction:
        return Fraction(self.b, self.N)

    @property
    def M(self) -> int:
        """Primitive denominator: least M > 0 with M r, M s integral."""
        return math.lcm(self.r.denominator, self.s.denominator)

    def canonical(self) -> "CharacterVector":
        M = self.M
        return CharacterVector(int(self.r * M) % M, int(self.s * M) % M, M)

    def normalize_pm(self) -> "CharacterVector":
        v, w = self.canonical(), (-self).canonical()
        return v if (v.a, v.b) <= (w.a, w.b) else w

    def at_level(self, N: int) -> tuple[int, int]:
        """Numerators of the canonical form over the denominator N."""
        v = self.canonical()
        if N % v.M:
            raise DomainError(f"denominator {v.M} does not divide level {N}")
        k = N // v.M
        return v.a * k, v.b * k

    def __neg__(self) -> "CharacterVector":
        return CharacterVector(-self.a, -self.b, self.N)

    def __add__(self, other: "CharacterVector") -> "CharacterVector":
        return CharacterVector.from_fractions(self.r + other.r, self.s + other.s)

    def __sub__(self, other: "CharacterVector") -> "CharacterVector":
        return CharacterVector.from_fractions(self.r - other.r, self.s - other.s)

    def __str__(self):
        return f"[{self.r};{self.s}]"


def cv(r, s) -> CharacterVector:
    """Shorthand: ``cv('1/6', 0)``."""
    return CharacterVector.from_fractions(r, s)


@dataclass(frozen=True)
class GL2ModN:
    """The matrix [[a, b], [c, d]] over Z/NZ."""

    a: int
    b: int
    c: int
    d: int
    N: int

    def __post_init__(self):
        N = self.N
        object.__setattr__(self, "a", self.a % N)
        object.__setattr__(self, "b", self.b % N)
        object.__setattr__(self, "c", self.c % N)
        object.__setattr__(self, "d", self.d % N)
        if math.gcd(self.det, N) != 1:
            raise DomainError(f"matrix {self.rows} is not invertible modulo {N}")

    @classmethod
    def scalar(cls, t: int, N: int) -> "GL2ModN":
        return cls(t, 0, 0, t, N)

    @classmethod
    def identity(cls, N: int) -> "GL2ModN":
        return cls.scalar(1, N)

    @property
    def det(self) -> int:
        return (self.a * self.d - self.b * self.c) % self.N

    @property
    def rows(self):
        return ((self.a, self.b), (self.c, self.d))

    def transpose(self) -> "GL2ModN":
        return GL2ModN(self.a, self.c, self.b, self.d, self.N)

    def __matmul__(self, other: "GL2ModN") -> "GL2ModN":
        if other.N != self.N:
            raise DomainError("levels differ")
        return GL2ModN(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            self.N,
        )


def act_transpose(gamma: GL2ModN, v: CharacterVector) -> CharacterVector:
    """Canonical form of  (transpose gamma) . v  mod Z^2."""
    x, y = v.at_level(gamma.N)
    g = gamma
    return CharacterVector(g.a * x + g.c * y, g.b * x + g.d * y, gamma.N).canonical()


def _tau(tau) -> mpc:
    tau = _check_tau(tau)
    if tau.imag < MIN_IM_TAU:
        raise DomainError(f"Im tau = {mpmath.nstr(tau.imag, 5)} is too close to the real axis")
    return tau


def dedekind_eta(tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    """Classical q^(1/24) prod (1 - q^n)."""
    with policy.context():
        tau = _tau(tau)
        q = mpmath.exp(2j * mpmath.pi * tau)
        T = terms_needed(tau.imag, 0, policy, prefactor=2.0)
        prod = mpc(1)
        qn = mpc(1)
        for _ in range(T):
            qn *= q
            prod *= 1 - qn
        return frac_exp(Fraction(1, 24), 0, tau, policy) * prod


def eta(tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    """sqrt(2 pi) zeta_8 q^(1/24) prod (1 - q^n)."""
    with policy.context():
        return mpmath.sqrt(2 * mpmath.pi) * expjpi(Fraction(1, 4)) * dedekind_eta(tau, policy)


def eisenstein_E4_E6(tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> tuple[mpc, mpc]:
    """Normalized E4 = 1 + 240 sum sigma_3(n) q^n and E6 = 1 - 504 sum sigma_5(n) q^n."""
    with policy.context():
        tau = _tau(tau)
        q = mpmath.exp(2j * mpmath.pi * tau)
        T = terms_needed(tau.imag, 0, policy, prefactor=1008.0, degree=5)
        s3 = mpc(0)
        s5 = mpc(0)
        qn = mpc(1)
        for n in range(1, T + 1):
            qn *= q
            w = qn / (1 - qn)
            n3 = n * n * n
            s3 += n3 * w
            s5 += n3 * n * n * w
        return 1 + 240 * s3, 1 - 504 * s5


def eisenstein_g2g3(tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> tuple[mpc, mpc]:
    """(g2, g3) of the lattice [tau, 1].

    g2 = (2 pi)^4 / 12 * E4 and g3 = (2 pi)^6 / 216 * E6.
    """
    with policy.context():
        e4, e6 = eisenstein_E4_E6(tau, policy)
        tp = 2 * mpmath.pi
        return tp**4 / 12 * e4, tp**6 / 216 * e6


def _delta_from(g2, g3, policy) -> mpc:
    d = g2**3 - 27 * g3**2
    size = abs(g2) ** 3 + 27 * abs(g3) ** 2
    if abs(d) <= size * mpmath.ldexp(mpf(1), -policy.working_bits):
        raise PrecisionError("discriminant is indistinguishable from zero at this precision")
    return d


def delta(tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    """g2^3 - 27 g3^2."""
    with policy.context():
        g2, g3 = eisenstein_g2g3(tau, policy)
        return _delta_from(g2, g3, policy)


def j_invariant(tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    with policy.context():
        g2, g3 = eisenstein_g2g3(tau, policy)
        return 1728 * g2**3 / _delta_from(g2, g3, policy)


def wp_char(v: CharacterVector, tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    """wp(r tau + s; [tau, 1]) from the q-expansion

        (2 pi i)^-2 wp = 1/12 + sum_{n in Z} q^n u/(1 - q^n u)^2 - 2 sum_{n>=1} q^n/(1 - q^n)^2

    with u = e^{2 pi i (r tau + s)} and 0 <= r < 1 after reduction mod Z^2.
    """
    v = v.canonical()
    with policy.context():
        tau = _tau(tau)
        q = mpmath.exp(2j * mpmath.pi * tau)
        u = frac_exp(v.r, v.s, tau, policy)
        r_min = -v.r
        bound = 1 - math.exp(-2 * math.pi * float(tau.imag) * float(1 + r_min))
        T = terms_needed(tau.imag, r_min, policy, prefactor=4.0 / bound**2)
        total = mpf(1) / 12 + u / (1 - u) ** 2
        qn = mpc(1)
        for _ in range(T):
            qn *= q
            a = qn * u
            b = qn / u
            total += a / (1 - a) ** 2 + b / (1 - b) ** 2 - 2 * qn / (1 - qn) ** 2
        return (2j * mpmath.pi) ** 2 * total


def fricke(v: CharacterVector, tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    """g2 g3 / Delta * wp_v, evaluated on the +/- normalized characteristic."""
    v = v.normalize_pm()
    with policy.context():
        g2, g3 = eisenstein_g2g3(tau, policy)
        return g2 * g3 / _delta_from(g2, g3, policy) * wp_char(v, tau, policy)


def fricke_prefactor(tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    with policy.context():
        g2, g3 = eisenstein_g2g3(tau, policy)
        return g2 * g3 / _delta_from(g2, g3, policy)


def siegel_shift(v: CharacterVector) -> tuple[CharacterVector, Fraction]:
    """Write g_v = exp(pi i e) * g_w with w in the box 0 <= r, s < 1.

    From the product:  g_[r+1; s] = -e^{-pi i s} g_[r; s]  and
    g_[r; s+1] = -e^{pi i r} g_[r; s].  Returns (w, e mod 2).
    """
    r, s = v.r, v.s
    k = math.floor(r)
    l = math.floor(s)
    r0, s0 = r - k, s - l
    # shift s first at r0, then r at s = s0 + l
    e = l * (1 + r0) + k * (1 - s)
    w = CharacterVector.from_fractions(r0, s0)
    return w, e % 2


def siegel_product(r, s, tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    """The defining product for any real rational r (no reduction)."""
    r, s = as_fraction(r), as_fraction(s)
    with policy.context():
        tau = _tau(tau)
        q = mpmath.exp(2j * mpmath.pi * tau)
        pre = -frac_exp((r * r - r + Fraction(1, 6)) / 2, s * (r - 1) / 2, tau, policy)
        x = frac_exp(r, s, tau, policy)
        T = terms_needed(tau.imag, -abs(r), policy, prefactor=4.0)
        prod = 1 - x
        qn = mpc(1)
        for _ in range(T):
            qn *= q
            prod *= (1 - qn * x) * (1 - qn / x)
        return pre * prod


def siegel(v: CharacterVector, tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    """Siegel function g_[r; s](tau) on the literal characteristic of v."""
    w, e = siegel_shift(v)
    with policy.context():
        return expjpi(e) * siegel_product(w.r, w.s, tau, policy)


def siegel_power(v: CharacterVector, tau, exponent: int | None = None,
                 policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    """g_v^exponent (default exponent 12 M); well defined on +/- v mod Z^2 when 12 M | exponent."""
    if exponent is None:
        exponent = 12 * v.M
    with policy.context():
        return siegel(v, tau, policy) ** exponent


def _wu_siegel_form(m: int, n: int, tau, policy) -> mpc:
    g = lambda r, s: siegel(cv(r, s), tau, policy)  # noqa: E731
    m_, mn = Fraction(1, m), Fraction(1, m * n)
    num = g(m_, mn) * g(-m_, mn) * g(0, m_) ** 2
    den = g(m_, m_) * g(-m_, m_) * g(0, mn) ** 2
    return num / den


def _wu_wp_form(m: int, n: int, tau, policy) -> mpc:
    w = lambda r, s: wp_char(cv(r, s), tau, policy)  # noqa: E731
    m_, mn = Fraction(1, m), Fraction(1, m * n)
    base = w(m_, 0)
    return (w(0, mn) - base) / (w(0, m_) - base)


def weierstrass_unit(m: int, n: int, tau, policy: PrecisionPolicy = DEFAULT_POLICY,
                     return_paths: bool = False):
    """h_{m,n}(tau), computed as a ratio of wp differences and as a Siegel product.

    The two must agree to 2^-(P/2); the Siegel value is returned.  With
    ``return_paths`` the pair (siegel_value, wp_value) is returned instead.
    """
    if m < 2 or n < 1:
        raise DomainError("need m >= 2 and n >= 1")
    with policy.context():
        tau = _tau(tau)
        if n == 1:
            one = mpc(1)
            return (one, one) if return_paths else one
        sv = _wu_siegel_form(m, n, tau, policy)
        wv = _wu_wp_form(m, n, tau, policy)
        if rel_diff(sv, wv) > policy.loose_tolerance:
            raise ConsistencyError(
                f"h_{{{m},{n}}}: Siegel and wp forms differ by {mpmath.nstr(rel_diff(sv, wv), 5)}"
            )
        return (sv, wv) if return_paths else sv
