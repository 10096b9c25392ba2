"""Arbitrary-precision substrate.

Real and complex values are mpmath ``mpf``/``mpc`` numbers.  A
:class:`PrecisionPolicy` fixes the working precision ``P`` and the guard
bits ``G``: every evaluation runs internally at ``P + G`` bits, series are
truncated once their tail drops below ``2**-(P+G)``, and identities are
asserted at ``2**-(P-G)`` relative to ``max(1, |lhs|, |rhs|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import mpmath
from mpmath import mpc, mpf

RealBig = mpf
ComplexBig = mpc

MIN_WORKING_BITS = 128
MIN_GUARD_BITS = 32


class DomainError(ValueError):
    """Argument outside the domain of a function (e.g. Im tau <= 0)."""


class PrecisionError(ArithmeticError):
    """The requested quantity cannot be resolved at the current precision."""


@dataclass(frozen=True)
class PrecisionPolicy:
    working_bits: int = 512
    guard_bits: int = 64

    def __post_init__(self):
        if self.working_bits < MIN_WORKING_BITS:
            raise ValueError(f"working_bits must be >= {MIN_WORKING_BITS}")
        if self.guard_bits < MIN_GUARD_BITS:
            raise ValueError(f"guard_bits must be >= {MIN_GUARD_BITS}")
        if self.guard_bits >= self.working_bits:
            raise ValueError("guard_bits must be smaller than working_bits")

    @property
    def internal_bits(self) -> int:
        return self.working_bits + self.guard_bits

    @property
    def tolerance(self) -> mpf:
        """Identity tolerance 2^-(P-G)."""
        return mpmath.ldexp(mpf(1), -(self.working_bits - self.guard_bits))

    @property
    def loose_tolerance(self) -> mpf:
        """Dual-path consistency tolerance 2^-(P/2)."""
        return mpmath.ldexp(mpf(1), -(self.working_bits // 2))

    @property
    def separation(self) -> mpf:
        """Distinctness threshold 2^-(P/4)."""
        return mpmath.ldexp(mpf(1), -(self.working_bits // 4))

    def context(self):
        return mpmath.workprec(self.internal_bits)

    def scaled(self, factor: int) -> "PrecisionPolicy":
        return replace(self, working_bits=self.working_bits * factor)

    def with_bits(self, bits: int) -> "PrecisionPolicy":
        return replace(self, working_bits=bits)


DEFAULT_POLICY = PrecisionPolicy()


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"exact rational expected, got {type(x).__name__}")


def _check_tau(tau) -> mpc:
    tau = mpmath.mpmathify(tau)
    if not isinstance(tau, mpc):
        tau = mpc(tau)
    if tau.imag <= 0:
        raise DomainError(f"tau must lie in the upper half-plane, got Im tau = {mpmath.nstr(tau.imag, 8)}")
    return tau


def scale_of(*values) -> mpf:
    return max([mpf(1)] + [abs(v) for v in values])


def rel_diff(a, b) -> mpf:
    """|a - b| / max(1, |a|, |b|)."""
    return abs(a - b) / scale_of(a, b)


def close(a, b, tol) -> bool:
    return rel_diff(a, b) <= tol


def eval_q(tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    """Return q = exp(2 pi i tau)."""
    with policy.context():
        tau = _check_tau(tau)
        return mpmath.exp(2j * mpmath.pi * tau)


def expjpi(x) -> mpc:
    """exp(pi i x) for exact rational x; exact at multiples of 1/2."""
    x = as_fraction(x) % 2
    if x.denominator <= 2:
        return {Fraction(0): mpc(1), Fraction(1, 2): mpc(0, 1),
                Fraction(1): mpc(-1), Fraction(3, 2): mpc(0, -1)}[x]
    return mpmath.expjpi(mpf(x.numerator) / x.denominator)


def frac_exp(r, s, tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    """Return exp(2 pi i (r tau + s)) for exact rationals r, s.

    This replaces every fractional power ``q**r * e(s)``, so no branch of
    a complex logarithm is ever chosen.
    """
    r = as_fraction(r)
    s = as_fraction(s)
    with policy.context():
        tau = _check_tau(tau)
        if r == 0:
            return expjpi(2 * s)
        rt = tau * mpf(r.numerator) / r.denominator
        return mpmath.exp(2j * mpmath.pi * rt) * expjpi(2 * s)


def terms_needed(im_tau, r_min, policy: PrecisionPolicy = DEFAULT_POLICY,
                 prefactor: float = 1.0, degree: int = 0) -> int:
    """Smallest T with  sum_{k>T} prefactor * k^degree * |q|^(k + r_min) < 2^-(P+G).

    ``|q| = exp(-2 pi im_tau)``.  The tail is bounded by its first term times
    the geometric factor ``1 / (1 - ((T+2)/(T+1))^degree |q|)``.  Everything
    is done in log space with floats; only a count is produced.
    """
    im_tau = float(im_tau)
    if im_tau <= 0:
        raise DomainError("im_tau must be positive")
    r_min = float(as_fraction(r_min)) if not isinstance(r_min, float) else r_min
    log_q = -2.0 * math.pi * im_tau
    target = -(policy.internal_bits + 0.0) * math.log(2.0)
    log_c = math.log(prefactor) if prefactor > 0 else 0.0
    t = 0
    while True:
        k = t + 1
        ratio = math.exp(log_q + degree * math.log((k + 1) / k))
        if ratio < 1.0 and k + r_min > 0:
            log_tail = log_c + degree * math.log(k) + (k + r_min) * log_q - math.log1p(-ratio)
            if log_tail < target:
                return t
        t += 1


def to_decimal(x, policy: PrecisionPolicy = DEFAULT_POLICY) -> str:
    """Decimal string with as many digits as P bits carry."""
    digits = max(1, int(policy.working_bits * math.log10(2)))
    with policy.context():
        return mpmath.nstr(x, digits)


def sci3(x) -> str:
    """Base-10 scientific notation with 3 significant digits (e.g. '1.23e-45')."""
    x = abs(mpmath.mpmathify(x))
    if x == 0:
        return "0.00e+00"
    with mpmath.workprec(64):
        e = int(mpmath.floor(mpmath.log10(x)))
        m = x / mpmath.mpf(10) ** e
        m = round(float(m), 2)
        if m >= 10.0:
            m /= 10.0
            e += 1
    return f"{m:.2f}e{e:+03d}"
