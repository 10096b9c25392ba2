"""Numerical certificates for Weierstrass units at CM points.

The unit alpha = h_{m,n}(theta_K) is held as a rational expression in
Fricke values.  Galois elements of K_(N)/K_(1) act on the leaves through
the transpose action on characteristics, so conjugates, relative norms to
the Hilbert class field and conjugate differences are all evaluated from
the same leaf table.  Unit-ness is read off the minimal polynomial of a
relative norm (degree <= 2 h_K), recognized by lattice reduction.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import mpmath
from mpmath import mpc, mpf

from cmunits.bignum import DEFAULT_POLICY, DomainError, PrecisionError, PrecisionPolicy, rel_diff, sci3
from cmunits.cmfield import (
    FieldError,
    IQField,
    check_hypotheses,
    enumerate_W,
    enumerate_gal_LF,
    make_field,
)
from cmunits.modfunc import (
    CharacterVector,
    ConsistencyError,
    GL2ModN,
    act_transpose,
    cv,
    fricke_prefactor,
    siegel,
    weierstrass_unit,
    wp_char,
)
from cmunits.recog import IntPolynomial, algdep, is_monic_integral, is_unit_poly, recognize

FORMAT_VERSION = "1"
MAX_RECOGNITION_BITS = 4096


# --- expressions -----------------------------------------------------------

class FrickeExpr:
    """Rational expression over Fricke (or Siegel-power) leaves."""

    def __add__(self, other):
        return _binop("+", self, _wrap(other))

    def __sub__(self, other):
        return _binop("-", self, _wrap(other))

    def __mul__(self, other):
        return _binop("*", self, _wrap(other))

    def __truediv__(self, other):
        return _binop("/", self, _wrap(other))

    def leaves(self) -> set["Leaf"]:
        raise NotImplementedError

    def map_leaves(self, fn) -> "FrickeExpr":
        raise NotImplementedError


@dataclass(frozen=True)
class Const(FrickeExpr):
    value: int

    def leaves(self):
        return set()

    def map_leaves(self, fn):
        return self


@dataclass(frozen=True)
class Leaf(FrickeExpr):
    """f_v, or g_v^power when kind == 'siegel'.  v is stored +/- normalized."""

    v: CharacterVector
    kind: str = "fricke"
    power: int = 1

    def __post_init__(self):
        if self.kind not in ("fricke", "siegel"):
            raise ValueError(f"unknown leaf kind {self.kind!r}")
        if self.kind == "siegel" and self.power % (12 * self.v.M):
            raise ValueError("Siegel leaves need an exponent divisible by 12 M")
        object.__setattr__(self, "v", self.v.normalize_pm())

    def leaves(self):
        return {self}

    def map_leaves(self, fn):
        return fn(self)


@dataclass(frozen=True)
class BinOp(FrickeExpr):
    op: str
    left: FrickeExpr
    right: FrickeExpr

    def leaves(self):
        return self.left.leaves() | self.right.leaves()

    def map_leaves(self, fn):
        return _binop(self.op, self.left.map_leaves(fn), self.right.map_leaves(fn))


def _wrap(x) -> FrickeExpr:
    return Const(x) if isinstance(x, int) else x


def _binop(op, a, b) -> FrickeExpr:
    if isinstance(a, Const) and isinstance(b, Const) and op != "/":
        return Const({"+": a.value + b.value, "-": a.value - b.value, "*": a.value * b.value}[op])
    if op == "-" and a == b:
        return Const(0)
    if op == "/" and a == b:
        return Const(1)
    if op == "/" and b == Const(1):
        return a
    if op == "*" and Const(1) in (a, b):
        return b if a == Const(1) else a
    return BinOp(op, a, b)


def fricke_leaf(r, s) -> Leaf:
    return Leaf(cv(r, s))


class Evaluator:
    """Evaluates expressions at one point and precision, memoizing leaf values."""

    def __init__(self, tau, policy: PrecisionPolicy = DEFAULT_POLICY):
        self.policy = policy
        with policy.context():
            self.tau = mpc(tau)
        self._leaf = {}
        self._pre = None

    def leaf(self, lf: Leaf) -> mpc:
        if lf not in self._leaf:
            with self.policy.context():
                if lf.kind == "fricke":
                    if self._pre is None:
                        self._pre = fricke_prefactor(self.tau, self.policy)
                    val = self._pre * wp_char(lf.v, self.tau, self.policy)
                else:
                    val = siegel(lf.v, self.tau, self.policy) ** lf.power
            self._leaf[lf] = val
        return self._leaf[lf]

    def __call__(self, e: FrickeExpr) -> mpc:
        with self.policy.context():
            return self._eval(e)

    def _eval(self, e):
        if isinstance(e, Const):
            return mpc(e.value)
        if isinstance(e, Leaf):
            return self.leaf(e)
        a = self._eval(e.left)
        b = self._eval(e.right)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if abs(b) <= self.policy.loose_tolerance:
            raise PrecisionError("denominator is numerically zero")
        return a / b


def evaluate(e: FrickeExpr, tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    return Evaluator(tau, policy)(e)


def alpha_expr(m: int, n: int) -> FrickeExpr:
    """(f_[0;1/mn] - f_[1/m;0]) / (f_[0;1/m] - f_[1/m;0])."""
    mn = m * n
    base = fricke_leaf(Fraction(1, m), 0)
    return (fricke_leaf(0, Fraction(1, mn)) - base) / (fricke_leaf(0, Fraction(1, m)) - base)


def _as_matrix(gamma, N: int) -> GL2ModN:
    if isinstance(gamma, int):
        return GL2ModN.scalar(gamma, N)
    if isinstance(gamma, GL2ModN):
        if gamma.N != N:
            raise DomainError(f"matrix level {gamma.N} differs from {N}")
        return gamma
    return gamma.matrix()  # WElement


def conjugate_expr(e: FrickeExpr, gamma, N: int) -> FrickeExpr:
    """Replace every leaf f_v by f_{transpose(gamma) v}.

    ``gamma`` is a GL2ModN, a WElement, or an integer t (the scalar t I).
    """
    g = _as_matrix(gamma, N)

    def act(lf: Leaf):
        return Leaf(act_transpose(g, lf.v), lf.kind, lf.power)

    return e.map_leaves(act)


def delta_expr(m: int, n: int, t: int) -> FrickeExpr:
    """alpha^t - alpha = (f_[0;t/mn] - f_[0;1/mn]) / (f_[0;1/m] - f_[1/m;0])."""
    mn = m * n
    if t % mn in (1, mn - 1):
        raise DomainError("t = +-1 mod mn gives the identity element")
    if math.gcd(t, mn) != 1:
        raise DomainError(f"t = {t} is not a unit modulo {mn}")
    num = fricke_leaf(0, Fraction(t, mn)) - fricke_leaf(0, Fraction(1, mn))
    return num / (fricke_leaf(0, Fraction(1, m)) - fricke_leaf(Fraction(1, m), 0))


def delta_siegel_form(m: int, n: int, t: int, tau, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpc:
    """alpha^t - alpha as the quotient of Siegel values

    g_[0;(t+1)/mn] g_[0;(t-1)/mn] g_[0;1/m]^2 g_[1/m;0]^2
    / (g_[1/m;1/m] g_[-1/m;1/m] g_[0;t/mn]^2 g_[0;1/mn]^2).
    """
    mn = m * n
    g = lambda r, s: siegel(cv(r, s), tau, policy)  # noqa: E731
    a, b = Fraction(1, m), Fraction(1, mn)
    with policy.context():
        num = g(0, (t + 1) * b) * g(0, (t - 1) * b) * g(0, a) ** 2 * g(a, 0) ** 2
        den = g(a, a) * g(-a, a) * g(0, t * b) ** 2 * g(0, b) ** 2
        return num / den


def rel_norm_to_K1(e: FrickeExpr, K: IQField, N: int, policy: PrecisionPolicy = DEFAULT_POLICY,
                   evaluator: Evaluator | None = None) -> mpc:
    """Product of the conjugates of e(theta_K) over W_{K,N} / {+-1}."""
    ev = evaluator or Evaluator(K.theta(policy), policy)
    with ev.policy.context():
        acc = mpc(1)
        for w in enumerate_W(K, N):
            acc *= ev(conjugate_expr(e, w, N))
        return acc


def trace_and_vandermonde(conjugates) -> tuple[mpc, mpc]:
    """det[sum_i a_i^(j+k)] and prod_{k1<k2} (a_k1 - a_k2)^2."""
    ell = len(conjugates)
    if ell == 0:
        raise ValueError("need at least one conjugate")
    power_sums = []
    for p in range(2 * ell - 1):
        power_sums.append(sum((a**p for a in conjugates), mpc(0)))
    T = mpmath.matrix(ell, ell)
    for j in range(ell):
        for k in range(ell):
            T[j, k] = power_sums[j + k]
    det_t = mpmath.det(T) if ell > 1 else power_sums[0]
    vprod = mpc(1)
    for a, b in itertools.combinations(conjugates, 2):
        vprod *= (a - b) ** 2
    return mpc(det_t), vprod


# --- certificates ------------------------------------------------------------

@dataclass
class Check:
    name: str
    status: str  # "pass" | "fail" | "flag"
    residual: str = "0.00e+00"
    polynomial: list[str] | None = None
    detail: str = ""


@dataclass
class Certificate:
    kind: str
    inputs: dict
    ell: int
    galois_reps: list[int]
    checks: list[Check] = field(default_factory=list)
    verdict: str = "fail"
    runtime_ms: int = 0
    format_version: str = FORMAT_VERSION

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def finalize(self):
        statuses = {c.status for c in self.checks}
        if "fail" in statuses or not self.checks:
            self.verdict = "fail"
        elif "flag" in statuses:
            self.verdict = "flag"
        else:
            self.verdict = "pass"
        return self

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def rejected(self) -> bool:
        """Failed on input validation rather than on a numerical check."""
        pre = ("field", "range", "hypothesis_i", "hypothesis_ii", "coprime", "precondition_not_prime_power")
        return any(c.status == "fail" and c.name in pre for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "kind": self.kind,
            "inputs": dict(self.inputs),
            "ell": self.ell,
            "galois_reps": list(self.galois_reps),
            "checks": [asdict(c) for c in self.checks],
            "verdict": self.verdict,
            "runtime_ms": self.runtime_ms,
        }

    def to_json(self, with_timing: bool = True) -> str:
        d = self.to_dict()
        if not with_timing:
            d.pop("runtime_ms")
        return json.dumps(d, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        return cls(
            kind=d["kind"],
            inputs=dict(d["inputs"]),
            ell=d["ell"],
            galois_reps=list(d["galois_reps"]),
            checks=[Check(**c) for c in d["checks"]],
            verdict=d["verdict"],
            runtime_ms=d.get("runtime_ms", 0),
            format_version=d.get("format_version", FORMAT_VERSION),
        )

    @classmethod
    def from_json(cls, text: str) -> "Certificate":
        return cls.from_dict(json.loads(text))

    def max_residual(self) -> str:
        worst = mpf(0)
        for c in self.checks:
            if c.name == "conjugates_distinct":
                continue
            worst = max(worst, mpmath.mpf(c.residual))
        return sci3(worst)


def _threshold_check(name: str, residual, tol, detail: str = "") -> Check:
    return Check(name, "pass" if residual <= tol else "fail", sci3(residual), None, detail)


class _Instance:
    """Per-precision evaluators at theta_K shared by all checks of a run."""

    def __init__(self, K: IQField):
        self.K = K
        self._ev = {}

    def evaluator(self, policy: PrecisionPolicy) -> Evaluator:
        key = (policy.working_bits, policy.guard_bits)
        if key not in self._ev:
            self._ev[key] = Evaluator(self.K.theta(policy), policy)
        return self._ev[key]

    def norm_at(self, e: FrickeExpr, N: int):
        return lambda pol: rel_norm_to_K1(e, self.K, N, pol, self.evaluator(pol))


def _unit_check(name: str, inst: _Instance, e: FrickeExpr, N: int, policy, max_bits) -> Check:
    deg = 2 * inst.K.h
    rec = recognize(inst.norm_at(e, N), deg, policy, max_bits=max_bits)
    if rec is None:
        return Check(name, "flag", detail=f"no integer relation of degree <= {deg} up to {max_bits} bits")
    p = rec.poly
    detail = f"degree {p.degree}, found at {rec.bits} bits, re-verified at {rec.verify_bits} bits"
    if not is_monic_integral(p):
        return Check(name, "fail", sci3(rec.residual), p.to_strings(), "not monic: " + detail)
    if not is_unit_poly(p):
        return Check(name, "fail", sci3(rec.residual), p.to_strings(), "constant term is not +-1: " + detail)
    return Check(name, "pass", sci3(rec.residual), p.to_strings(), detail)


def _field_or_fail(cert: Certificate, d: int) -> IQField | None:
    try:
        K = make_field(d)
    except FieldError as exc:
        cert.add(Check("field", "fail", detail=str(exc)))
        return None
    cert.add(Check("field", "pass", detail=f"{K}, class number {K.h}"))
    return K


def verify_pib(d: int, m: int, n: int, policy: PrecisionPolicy = DEFAULT_POLICY,
               absolute_degree: int | None = None, max_bits: int = MAX_RECOGNITION_BITS) -> Certificate:
    """Certify numerically that h_{m,n}(theta_K) generates a relative power integral basis."""
    start = time.perf_counter()
    cert = Certificate("pib", {"d_K": d, "m": m, "n": n, "precision_bits": policy.working_bits}, 0, [])
    try:
        K = _field_or_fail(cert, d)
        if K is None:
            return cert.finalize()
        violations = {v.name: v.reason for v in check_hypotheses(K, m, n)}
        if "range" in violations:
            cert.add(Check("range", "fail", detail=violations["range"]))
            return cert.finalize()
        for name in ("hypothesis_i", "hypothesis_ii"):
            cert.add(Check(name, "fail" if name in violations else "pass", detail=violations.get(name, "")))
        if violations:
            return cert.finalize()
        _run_pib(cert, K, m, n, policy, absolute_degree, max_bits)
        return cert.finalize()
    finally:
        cert.runtime_ms = int((time.perf_counter() - start) * 1000)


def _run_pib(cert, K, m, n, policy, absolute_degree, max_bits):
    N = m * n
    reps = enumerate_gal_LF(m, n)
    cert.ell = len(reps)
    cert.galois_reps = list(reps)
    inst = _Instance(K)
    ev = inst.evaluator(policy)
    tau = ev.tau
    alpha = alpha_expr(m, n)

    try:
        sv, wv = weierstrass_unit(m, n, tau, policy, return_paths=True)
        cert.add(_threshold_check("alpha_dual_path", rel_diff(sv, wv), policy.loose_tolerance,
                                  "wp-ratio vs Siegel-product forms"))
    except ConsistencyError as exc:
        cert.add(Check("alpha_dual_path", "fail", detail=str(exc)))
        return
    with policy.context():
        cert.add(_threshold_check("alpha_fricke_expr", rel_diff(ev(alpha), sv), policy.loose_tolerance,
                                  "Fricke-quotient vs Siegel-product forms"))

    conj = [ev(conjugate_expr(alpha, t, N)) for t in reps]
    if len(conj) == 1:
        cert.add(Check("conjugates_distinct", "pass", detail="vacuous (ell = 1)"))
    else:
        with policy.context():
            gap = min(rel_diff(a, b) for a, b in itertools.combinations(conj, 2))
        status = "pass" if gap > policy.separation else "flag"
        cert.add(Check("conjugates_distinct", status, sci3(gap), None, "minimum relative gap between conjugates"))

    cert.add(_unit_check("alpha_unit", inst, alpha, N, policy, max_bits))
    for t1, t2 in itertools.combinations(reps, 2):
        diff = conjugate_expr(alpha, t1, N) - conjugate_expr(alpha, t2, N)
        cert.add(_unit_check(f"difference_unit[{t1},{t2}]", inst, diff, N, policy, max_bits))

    with policy.context():
        det_t, vprod = trace_and_vandermonde(conj)
        cert.add(_threshold_check("trace_vandermonde", rel_diff(det_t, vprod), policy.loose_tolerance,
                                  f"det T = {mpmath.nstr(det_t, 12)}"))
        for t in reps[1:]:
            fr = ev(delta_expr(m, n, t))
            sg = delta_siegel_form(m, n, t, tau, policy)
            cert.add(_threshold_check(f"delta_siegel[{t}]", rel_diff(fr, sg), policy.loose_tolerance,
                                      "Fricke-difference vs Siegel-product forms"))

    if absolute_degree:
        rec = recognize(lambda pol: inst.evaluator(pol)(alpha), absolute_degree, policy, max_bits=max_bits)
        if rec is None:
            cert.add(Check("absolute_minpoly", "flag", detail=f"no relation of degree <= {absolute_degree}"))
        else:
            ok = is_unit_poly(rec.poly)
            cert.add(Check("absolute_minpoly", "pass" if ok else "fail", sci3(rec.residual),
                           rec.poly.to_strings(), f"degree {rec.poly.degree}"))


def verify_siegel_ramachandra(d: int, N: int, u: int, policy: PrecisionPolicy = DEFAULT_POLICY,
                              max_bits: int = MAX_RECOGNITION_BITS) -> Certificate:
    """Certify numerically that g_[0;u/N](theta_K)^(12N) is a unit of K_(N)."""
    start = time.perf_counter()
    cert = Certificate("siegel_ramachandra", {"d_K": d, "N": N, "u": u, "precision_bits": policy.working_bits},
                       0, [])
    try:
        K = _field_or_fail(cert, d)
        if K is None:
            return cert.finalize()
        if N < 2 or math.gcd(u, N) != 1:
            cert.add(Check("coprime", "fail", detail=f"need N >= 2 and gcd(u, N) = 1 (N={N}, u={u})"))
            return cert.finalize()
        cert.add(Check("coprime", "pass"))
        if K.is_prime_ideal_power(N):
            cert.add(Check("precondition_not_prime_power", "fail",
                           detail=f"({N}) is a power of a prime ideal in {K}"))
            return cert.finalize()
        cert.add(Check("precondition_not_prime_power", "pass"))

        W = enumerate_W(K, N)
        cert.ell = len(W)
        inst = _Instance(K)
        ev = inst.evaluator(policy)
        power = 12 * N
        v1, vu = cv(0, Fraction(1, N)), cv(0, Fraction(u, N))
        leaf_1 = Leaf(v1, "siegel", power)
        leaf_u = Leaf(vu, "siegel", power)
        with policy.context():
            direct = siegel(vu, ev.tau, policy) ** power
            conj = ev(conjugate_expr(leaf_1, u, N))
            cert.add(_threshold_check("conjugate_identity", rel_diff(direct, conj), policy.loose_tolerance,
                                      "g_[0;u/N]^(12N) vs the (u I)-conjugate of g_[0;1/N]^(12N)"))
        cert.add(_unit_check("sr_unit", inst, leaf_u, N, policy, max_bits))
        with policy.context():
            n_u = rel_norm_to_K1(leaf_u, K, N, policy, ev)
            n_1 = rel_norm_to_K1(leaf_1, K, N, policy, ev)
            cert.add(_threshold_check("norm_reindex", rel_diff(n_u, n_1), policy.loose_tolerance,
                                      "norm of the u-value vs norm of the 1-value"))
        return cert.finalize()
    finally:
        cert.runtime_ms = int((time.perf_counter() - start) * 1000)
