import itertools
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from cmunits.bignum import PrecisionError, PrecisionPolicy
from cmunits.modfunc import j_invariant
from cmunits.recog import (
    IntPolynomial,
    RankError,
    algdep,
    is_monic_integral,
    is_unit_poly,
    lll_reduce,
    normalized_residual,
    recognize,
)

DELTA = Fraction(99, 100)


def gram_schmidt(rows):
    """Exact Gram-Schmidt over Fractions: returns (b*, mu)."""
    bstar, mu = [], [[Fraction(0)] * len(rows) for _ in rows]
    for i, b in enumerate(rows):
        v = [Fraction(x) for x in b]
        for j in range(i):
            bj = bstar[j]
            mu[i][j] = sum(Fraction(x) * y for x, y in zip(b, bj)) / sum(y * y for y in bj)
            v = [x - mu[i][j] * y for x, y in zip(v, bj)]
        bstar.append(v)
    return bstar, mu


def assert_lll_reduced(rows, delta=DELTA):
    bstar, mu = gram_schmidt(rows)
    norm = [sum(x * x for x in v) for v in bstar]
    for i in range(len(rows)):
        for j in range(i):
            assert abs(mu[i][j]) <= Fraction(1, 2)
    for k in range(1, len(rows)):
        assert norm[k] >= (delta - mu[k][k - 1] ** 2) * norm[k - 1]


def det(M):
    M = [[Fraction(x) for x in r] for r in M]
    n, out = len(M), Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            out = -out
        out *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return out


@st.composite
def full_rank_bases(draw):
    n = draw(st.integers(2, 5))
    rows = draw(st.lists(st.lists(st.integers(-10**6, 10**6), min_size=n, max_size=n),
                         min_size=n, max_size=n))
    if det(rows) == 0:
        rows = [[int(i == j) * 7 + x for j, x in enumerate(r)] for i, r in enumerate(rows)]
    return rows


@settings(max_examples=60, deadline=None)
@given(full_rank_bases())
def test_lll_properties(rows):
    if det(rows) == 0:
        with pytest.raises(RankError):
            lll_reduce(rows)
        return
    red, U = lll_reduce(rows, return_transform=True)
    assert_lll_reduced(red)
    assert abs(det(U)) == 1
    prod = [[sum(U[i][k] * rows[k][j] for k in range(len(rows))) for j in range(len(rows[0]))]
            for i in range(len(rows))]
    assert prod == red
    assert abs(det(red)) == abs(det(rows))


def test_lll_rank_error():
    with pytest.raises(RankError):
        lll_reduce([[1, 2, 3], [2, 4, 6], [0, 0, 1]])
    with pytest.raises(RankError):
        lll_reduce([[0, 0], [1, 1]])


def test_lll_two_dim_shortest():
    rows = [[201, 37], [1648, 297]]
    red = lll_reduce(rows)
    best = min(a * a + b * b for a, b in (
        (x * 201 + y * 1648, x * 37 + y * 297)
        for x, y in itertools.product(range(-60, 61), repeat=2) if (x, y) != (0, 0)))
    assert red[0][0] ** 2 + red[0][1] ** 2 == best


def test_lll_rejects_bad_delta():
    with pytest.raises(ValueError):
        lll_reduce([[1, 0], [0, 1]], delta=Fraction(1, 5))


def test_intpolynomial_normalization():
    p = IntPolynomial.primitive([6, 0, -4])
    assert p.coeffs == (-3, 0, 2) or p.coeffs == (3, 0, -2)
    assert p.leading > 0 and p.degree == 2 and p.height == 3
    with pytest.raises(ValueError):
        IntPolynomial((5,))
    assert IntPolynomial((1, 0, 0, 1, 0)).degree == 3


def test_monic_and_unit_predicates():
    assert is_unit_poly(IntPolynomial((1, 85, 8129, 3729, 897, -61, 1)))
    assert is_monic_integral(IntPolynomial((2, 0, 1)))
    assert not is_unit_poly(IntPolynomial((2, 0, 1)))
    assert not is_monic_integral(IntPolynomial((1, 0, 2)))
    assert is_unit_poly(IntPolynomial((-1, 1)))


@pytest.mark.parametrize("x, expected", [
    (lambda: mpmath.mpf(1728), (-1728, 1)),
    (lambda: mpmath.sqrt(2), (-2, 0, 1)),
    (lambda: (1 + mpmath.sqrt(5)) / 2, (-1, -1, 1)),
    (lambda: mpmath.mpc(0, 1), (1, 0, 1)),
    (lambda: mpmath.cbrt(2) + 1, (-3, 3, -3, 1)),
], ids=["1728", "sqrt2", "golden", "i", "cbrt2+1"])
def test_algdep_corpus(x, expected):
    pol = PrecisionPolicy(256, 64)
    with pol.context():
        p = algdep(x(), 4, pol)
    assert p is not None and p.coeffs == expected


def test_algdep_hilbert_class_polynomial():
    pol = PrecisionPolicy(512, 64)
    with pol.context():
        tau = mpmath.mpc(-1, mpmath.sqrt(23)) / 2
        j = j_invariant(tau, pol)
    p = algdep(j, 3, pol)
    assert p.coeffs == (12771880859375, -5151296875, 3491750, 1)


def test_algdep_transcendental_is_chance_level():
    pol = PrecisionPolicy(256, 64)
    with pol.context():
        with pytest.raises(PrecisionError):
            algdep(+mpmath.pi, 2, pol)


def test_algdep_precision_guard():
    with pytest.raises(PrecisionError):
        algdep(mpmath.mpf(2), 8, PrecisionPolicy(128, 32))


@pytest.mark.parametrize("seed", range(5))
def test_algdep_stable_under_doubling(seed):
    rng = random.Random(seed)
    a, b = rng.randint(2, 50), rng.randint(-30, 30)
    pol = PrecisionPolicy(256, 64)
    polys = []
    for P in (pol, pol.scaled(2)):
        with P.context():
            x = mpmath.sqrt(a) * 1j + b
            polys.append(algdep(x, 3, P))
    assert polys[0] == polys[1]
    assert polys[0].degree == 2


def test_recognize_escalates_and_reverifies():
    calls = []

    def value_at(pol):
        calls.append(pol.working_bits)
        with pol.context():
            return mpmath.cbrt(mpmath.mpf(7)) + mpmath.sqrt(3)

    rec = recognize(value_at, 6, PrecisionPolicy(192, 64), max_bits=1024)
    assert rec is not None and rec.poly.degree == 6 and is_monic_integral(rec.poly)
    assert rec.verify_bits == 2 * rec.bits
    assert calls[-1] == rec.verify_bits
    with mpmath.workprec(rec.verify_bits + 64):
        x = mpmath.cbrt(mpmath.mpf(7)) + mpmath.sqrt(3)
        assert normalized_residual(rec.poly, x) < mpmath.mpf(2) ** (-rec.verify_bits // 2)


def test_recognize_gives_up():
    def value_at(pol):
        with pol.context():
            return mpmath.e + mpmath.pi * 1j

    assert recognize(value_at, 3, PrecisionPolicy(256, 64), max_bits=512) is None
