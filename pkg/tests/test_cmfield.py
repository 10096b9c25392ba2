import math

import mpmath
import pytest
from sympy import factorint, jacobi_symbol

from cmunits.bignum import PrecisionPolicy
from cmunits.cmfield import (
    FieldError,
    HypothesisError,
    class_number,
    enumerate_W,
    enumerate_gal_LF,
    is_fundamental,
    kronecker,
    make_field,
    reduced_forms,
    unit_group_order,
    validate,
)


def kronecker_oracle(d, n):
    """Multiplicative Kronecker symbol (d/n) built from sympy's Jacobi symbol."""
    out = 1
    for p, e in factorint(n).items():
        if p == 2:
            k = 0 if d % 2 == 0 else (1 if d % 8 in (1, 7) else -1)
        else:
            k = jacobi_symbol(d % p, p)
        out *= k**e
    return out


def class_number_dirichlet(d):
    """h(d) = -(1/|d|) sum_{a<|d|} (d/a) a  for fundamental d < -4."""
    s = sum(kronecker_oracle(d, a) * a for a in range(1, -d))
    return -s // -d


def test_make_field_minus_23():
    K = make_field(-23)
    assert (K.B, K.C, K.h) == (23, 138, 3)
    pol = PrecisionPolicy(256, 64)
    with pol.context():
        th = K.theta(pol)
        assert th == mpmath.mpc(-23, mpmath.sqrt(23)) / 2
        assert abs(th**2 + K.B * th + K.C) < pol.tolerance * K.C
        assert th.imag > 0


@pytest.mark.parametrize("d", [-12, -4, -3, 5, 0, -1, -8 * 4])
def test_make_field_rejects(d):
    with pytest.raises(FieldError):
        make_field(d)


@pytest.mark.parametrize("d", [-7, -8, -15, -20, -23, -24, -31, -39, -47, -71, -84, -95, -104])
def test_theta_root_residual(d):
    K = make_field(d)
    pol = PrecisionPolicy(256, 64)
    with pol.context():
        th = K.theta(pol)
        assert abs(th**2 + K.B * th + K.C) < pol.tolerance * abs(K.C)


def test_kronecker_examples():
    assert kronecker(-23, 2) == 1
    assert kronecker(-23, 5) == -1
    assert kronecker(-7, 3) == -1
    assert kronecker(-23, 23) == 0
    assert kronecker(-20, 2) == 0


@pytest.mark.parametrize("d", [-7, -15, -23, -31, -40, -47, -83, -120])
def test_kronecker_matches_oracle(d):
    for p in [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]:
        assert kronecker(d, p) == kronecker_oracle(d, p)


def test_class_number_examples():
    assert class_number(-23) == 3
    assert sorted(reduced_forms(-23)) == [(1, 1, 6), (2, -1, 3), (2, 1, 3)]
    assert class_number(-4) == 1
    assert reduced_forms(-4) == [(1, 0, 1)]
    assert class_number(-47) == 5


def test_class_number_matches_dirichlet_sum():
    for d in range(-5, -400, -1):
        if is_fundamental(d):
            assert class_number(d) == class_number_dirichlet(d), d


def test_validate():
    K = make_field(-23)
    params = validate(K, 6, 2)
    assert params.primes_m == (2, 3) and params.level == 12
    with pytest.raises(HypothesisError) as exc:
        validate(K, 4, 1)
    assert [v.name for v in exc.value.violations] == ["hypothesis_i"]
    with pytest.raises(HypothesisError) as exc:
        validate(make_field(-7), 6, 1)
    assert [v.name for v in exc.value.violations] == ["hypothesis_ii"]
    assert "3 inert" in str(exc.value)
    with pytest.raises(HypothesisError) as exc:
        validate(make_field(-7), 9, 1)
    assert {v.name for v in exc.value.violations} == {"hypothesis_i", "hypothesis_ii"}


def _brute_W(K, N):
    pairs = [(t, s) for t in range(N) for s in range(N)
             if math.gcd((t * t - K.B * t * s + K.C * s * s) % N, N) == 1]
    classes = {frozenset({(t, s), ((-t) % N, (-s) % N)}) for t, s in pairs}
    return pairs, classes


def test_enumerate_W_examples():
    K = make_field(-23)
    W2 = enumerate_W(K, 2)
    assert [(w.t, w.s) for w in W2] == [(1, 0)]
    pairs3, classes3 = _brute_W(K, 3)
    assert len(pairs3) == 4 and len(enumerate_W(K, 3)) == 2 == len(classes3)
    assert unit_group_order(-23, 12) == 16
    assert len(enumerate_W(K, 12)) == 8


@pytest.mark.parametrize("d", [-23, -7, -20, -15])
def test_enumerate_W_formula(d):
    K = make_field(d)
    for N in range(2, 61):
        pairs, classes = _brute_W(K, N)
        ws = enumerate_W(K, N)
        assert len(ws) == len(classes)
        assert len(pairs) == unit_group_order(d, N)
        assert len(ws) == (unit_group_order(d, N) // (2 if N > 2 else 1))
        for w in ws:
            assert math.gcd(w.det, N) == 1
            assert math.gcd(w.matrix().det, N) == 1


def test_enumerate_gal_LF():
    assert enumerate_gal_LF(6, 2) == [1, 5]
    assert enumerate_gal_LF(6, 4) == [1, 5, 7, 11]
    assert enumerate_gal_LF(6, 1) == [1]
    for m in range(2, 31):
        assert enumerate_gal_LF(m, 1) == [1]
        for n in range(1, 6):
            mn = m * n
            reps = enumerate_gal_LF(m, n)
            assert reps[0] == 1
            for t in reps:
                assert math.gcd(t, mn) == 1 and t % m in (1, m - 1) and t <= mn - t
            units = [t for t in range(mn) if math.gcd(t, mn) == 1 and t % m in (1 % m, (m - 1) % m)]
            assert len(reps) == max(1, len(units) // (2 if mn > 2 else 1))


def test_prime_ideal_power():
    K = make_field(-23)
    assert K.is_prime_ideal_power(5)
    assert K.is_prime_ideal_power(25)
    assert K.is_prime_ideal_power(23)
    assert not K.is_prime_ideal_power(2)
    assert not K.is_prime_ideal_power(12)
    assert not K.is_prime_ideal_power(10)
