"""Identity suites run by ``cmunits selftest``.

Each suite returns a list of (label, ok, detail) rows.  They are smaller
than the acceptance tests and meant as a quick health check of an install.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import mpmath
from mpmath import mpc

from cmunits.bignum import PrecisionPolicy, rel_diff
from cmunits.cmfield import enumerate_W, make_field, reduced_forms, unit_group_order
from cmunits.modfunc import (
    CharacterVector,
    cv,
    dedekind_eta,
    delta,
    eta,
    fricke,
    j_invariant,
    siegel,
    siegel_shift,
    wp_char,
)
from cmunits.recog import IntPolynomial, algdep

J_COEFFS = (1, 744, 196884, 21493760, 864299970)
J_C4_BOUND = 2.1e10


def _random_taus(rng, count, lo=0.5, hi=2.0):
    return [mpc(rng.uniform(-0.5, 0.5), rng.uniform(lo, hi)) for _ in range(count)]


def suite_delta(policy, seed=0):
    rng = random.Random(seed)
    rows = []
    with policy.context():
        for tau in _random_taus(rng, 4, 0.5, 5.0):
            d = delta(tau, policy)
            err = rel_diff(d, (2 * mpmath.pi) ** 12 * dedekind_eta(tau, policy) ** 24)
            err2 = rel_diff(d, eta(tau, policy) ** 24)
            rows.append((f"tau={mpmath.nstr(tau, 5)}", max(err, err2) < policy.tolerance, mpmath.nstr(err, 3)))
    return rows


def siegel_table(N: int, tau, policy) -> dict[tuple[int, int], mpc]:
    """Siegel values on the box 0 <= a, b < N at level N (origin excluded)."""
    return {(a, b): siegel(CharacterVector(a, b, N), tau, policy)
            for a in range(N) for b in range(N) if (a, b) != (0, 0)}


def siegel_from_table(table, a: int, b: int, N: int):
    w, e = siegel_shift(CharacterVector(a, b, N))
    x, y = w.at_level(N)
    return mpmath.expjpi(mpmath.mpf(e.numerator) / e.denominator) * table[(x, y)]


def wtog_pairs(N: int):
    """Unordered pairs of +-classes of nonzero vectors of (1/N)Z^2 / Z^2."""
    reps = []
    seen = set()
    for a in range(N):
        for b in range(N):
            if (a, b) == (0, 0) or (a, b) in seen:
                continue
            seen.add((a, b))
            seen.add(((-a) % N, (-b) % N))
            reps.append((a, b))
    return list(itertools.combinations(reps, 2))


def wtog_residuals(N: int, tau, policy):
    """Residuals of wp_a - wp_c = -g_{a+c} g_{a-c} eta^4 / (g_a^2 g_c^2) over all level-N pairs."""
    with policy.context():
        table = siegel_table(N, tau, policy)
        wps = {k: wp_char(CharacterVector(k[0], k[1], N), tau, policy) for k in table}
        e4 = eta(tau, policy) ** 4
        out = []
        for (a, b), (c, d) in wtog_pairs(N):
            lhs = wps[(a, b)] - wps[(c, d)]
            rhs = -(siegel_from_table(table, a + c, b + d, N) * siegel_from_table(table, a - c, b - d, N) * e4
                    / (table[(a, b)] ** 2 * table[(c, d)] ** 2))
            out.append(rel_diff(lhs, rhs))
        return out


def suite_wtog(policy, seed=0, max_level=6):
    rng = random.Random(seed)
    rows = []
    for N in range(2, max_level + 1):
        tau = _random_taus(rng, 1, 0.8, 2.0)[0]
        res = wtog_residuals(N, tau, policy)
        worst = max(res) if res else mpmath.mpf(0)
        rows.append((f"N={N} ({len(res)} pairs)", worst < policy.tolerance, mpmath.nstr(worst, 3)))
    return rows


def random_vector(rng, max_den=24) -> CharacterVector:
    while True:
        N = rng.randint(2, max_den)
        a, b = rng.randrange(N), rng.randrange(N)
        if (a, b) != (0, 0):
            return CharacterVector(a, b, N)


def suite_pm(policy, seed=0, count=10):
    rng = random.Random(seed)
    rows = []
    with policy.context():
        for tau in _random_taus(rng, 1, 0.8, 2.0):
            for _ in range(count):
                v = random_vector(rng)
                e = 12 * v.M
                f_err = rel_diff(fricke(v, tau, policy), fricke(-v, tau, policy))
                g_err = rel_diff(siegel(v, tau, policy) ** e, siegel(-v, tau, policy) ** e)
                ok = max(f_err, g_err) < policy.tolerance
                rows.append((f"v={v}", ok, mpmath.nstr(max(f_err, g_err), 3)))
    return rows


def j_series_check(tau, policy):
    """(|j - truncated series|, 2 |c4| |q|^4) with the four-term expansion."""
    with policy.context():
        q = mpmath.exp(2j * mpmath.pi * tau)
        c = J_COEFFS
        series = c[0] / q + c[1] + c[2] * q + c[3] * q**2 + c[4] * q**3
        return abs(j_invariant(tau, policy) - series), 2 * J_C4_BOUND * abs(q) ** 4


def suite_jseries(policy, seed=0):
    rows = []
    for y in (4, 5):
        err, bound = j_series_check(mpc(0, y), policy)
        rows.append((f"tau={y}i coeffs {J_COEFFS}", err <= bound, f"{mpmath.nstr(err, 3)} <= {mpmath.nstr(bound, 3)}"))
    return rows


def wp_lattice_oracle(r: float, s: float, tau: complex, R: int = 200) -> complex:
    """Direct lattice sum for wp(r tau + s; [tau, 1]), box |a|,|b| <= R, Richardson in R."""
    import numpy as np

    def partial(R):
        k = np.arange(-R, R + 1)
        A, B = np.meshgrid(k, k, indexing="ij")
        w = (A * tau + B).ravel()
        w = w[w != 0]
        z = r * tau + s
        return 1 / z**2 + np.sum(1 / (z - w) ** 2 - 1 / w**2)

    return (4 * partial(2 * R) - partial(R)) / 3


def suite_wp(policy, seed=0, count=4):
    rng = random.Random(seed)
    rows = []
    low = PrecisionPolicy(128, 32)
    for _ in range(count):
        tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.8, 1.5))
        v = random_vector(rng, 8).canonical()
        with low.context():
            val = complex(wp_char(v, tau, low))
        ref = wp_lattice_oracle(float(v.r), float(v.s), tau, 100)
        err = abs(val - ref) / max(1.0, abs(ref))
        rows.append((f"v={v} tau={tau:.3f}", err < 1e-6, f"{err:.2e}"))
    return rows


def suite_wenum(policy, seed=0, max_level=30):
    K = make_field(-23)
    rows = []
    bad = []
    for N in range(2, max_level + 1):
        expected = unit_group_order(K.d, N)
        if N > 2:
            expected //= 2
        if len(enumerate_W(K, N)) != expected:
            bad.append(N)
    rows.append((f"|W_(-23,N)| formula, N <= {max_level}", not bad, f"mismatch at {bad}" if bad else "ok"))
    return rows


def hilbert_class_polynomial_oracle(d: int, policy) -> IntPolynomial:
    """prod (X - j((-b + sqrt d) / 2a)) over reduced forms, coefficients rounded."""
    with policy.context():
        coeffs = [mpc(1)]
        for a, b, _ in reduced_forms(d):
            tau = mpc(-b, mpmath.sqrt(-d)) / (2 * a)
            jv = j_invariant(tau, policy)
            nxt = [mpc(0)] * (len(coeffs) + 1)
            for i, c in enumerate(coeffs):
                nxt[i + 1] += c
                nxt[i] -= jv * c
            coeffs = nxt
        return IntPolynomial(tuple(int(mpmath.nint(c.real)) for c in coeffs))


def suite_algdep(policy, seed=0):
    pol = PrecisionPolicy(max(policy.working_bits, 512), policy.guard_bits)
    rows = []
    with pol.context():
        cases = [
            ("sqrt2", mpmath.sqrt(2), 2, IntPolynomial((-2, 0, 1))),
            ("golden", (1 + mpmath.sqrt(5)) / 2, 4, IntPolynomial((-1, -1, 1))),
            ("j(theta_-23)", j_invariant(make_field(-23).theta(pol), pol), 3,
             hilbert_class_polynomial_oracle(-23, pol)),
        ]
        for label, x, deg, expected in cases:
            got = algdep(x, deg, pol)
            rows.append((label, got == expected, str(got)))
    return rows


SUITES = {
    "delta": suite_delta,
    "wtog": suite_wtog,
    "pm": suite_pm,
    "jseries": suite_jseries,
    "wp": suite_wp,
    "wenum": suite_wenum,
    "algdep": suite_algdep,
}


def run_suites(names, policy, seed=0):
    """Yield (suite, label, ok, detail)."""
    for name in names:
        for label, ok, detail in SUITES[name](policy, seed=seed):
            yield name, label, bool(ok), detail
