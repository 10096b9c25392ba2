"""Command-line interface: ``cmunits eval|verify|scan|selftest``.

Exit codes: 0 pass, 1 verification failure, 2 invalid input or domain error.
Settings resolve as command-line flag > ``--config`` file (key=value lines)
> ``CMUNITS_PREC`` / ``CMUNITS_GUARD`` environment variables > defaults.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from cmunits.bignum import DomainError, PrecisionError, PrecisionPolicy, to_decimal
from cmunits.cmfield import FieldError, check_hypotheses, make_field
from cmunits.modfunc import (
    ConsistencyError,
    cv,
    delta,
    eisenstein_g2g3,
    eta,
    fricke,
    j_invariant,
    siegel,
    weierstrass_unit,
    wp_char,
)
from cmunits.selftest import SUITES, run_suites
from cmunits.verifier import Certificate, verify_pib

log = logging.getLogger("cmunits")

EXIT_PASS, EXIT_FAIL, EXIT_INVALID = 0, 1, 2
FORMATS = ("json", "csv", "text")
FUNCTIONS = ("eta", "g2", "g3", "delta", "j", "wp", "fricke", "siegel", "h")
SCAN_FIELDS = ("d_K", "m", "n", "ell", "verdict", "max_residual", "detail")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    prec: int = 512
    guard: int = 64
    out: str | None = None
    format: str = "json"
    jobs: int = 0
    absolute: int = 0
    extra: dict = field(default_factory=dict)

    def policy(self) -> PrecisionPolicy:
        try:
            return PrecisionPolicy(self.prec, self.guard)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    cfg = RunConfig()
    layers = [
        {"prec": environ.get("CMUNITS_PREC"), "guard": environ.get("CMUNITS_GUARD")},
        read_config_file(args.config) if getattr(args, "config", None) else {},
        {k: getattr(args, k, None) for k in ("prec", "guard", "out", "format", "jobs", "absolute")},
    ]
    for layer in layers:
        for key, val in layer.items():
            if val is None or not hasattr(cfg, key) or key == "extra":
                continue
            cur = getattr(cfg, key)
            try:
                setattr(cfg, key, int(val) if isinstance(cur, int) and not isinstance(val, int) else val)
            except ValueError as exc:
                raise UsageError(f"bad value for {key}: {val!r}") from exc
    if cfg.format not in FORMATS:
        raise UsageError(f"format must be one of {FORMATS}")
    cfg.policy()
    return cfg


def parse_complex(text: str):
    """Parse decimal literals like '2i', '0.5+1.25i', '-0.5+i', '3'."""
    t = text.strip().replace(" ", "").replace("j", "i")
    if not t:
        raise UsageError("empty complex literal")
    if t.endswith("i"):
        body = t[:-1]
        m = re.match(r"^(.*?)([+-]?)([\d.]*(?:[eE][+-]?\d+)?)$", body)
        if not m:
            raise UsageError(f"cannot parse {text!r}")
        re_part, sign, im_digits = m.groups()
        if re_part and not re_part[-1].isdigit() and re_part[-1] != ".":
            raise UsageError(f"cannot parse {text!r}")
        im = (im_digits or "1")
        try:
            re_val = mpmath.mpf(re_part) if re_part else mpmath.mpf(0)
            im_val = mpmath.mpf(im) * (-1 if sign == "-" else 1)
        except (ValueError, TypeError) as exc:
            raise UsageError(f"cannot parse {text!r}") from exc
        return mpmath.mpc(re_val, im_val)
    try:
        return mpmath.mpc(mpmath.mpf(t))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"cannot parse {text!r}") from exc


def parse_int_list(text: str) -> list[int]:
    """'-23,-47', '6', '1..4' or '-40..-3' (inclusive ranges)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            step = 1 if hi >= lo else -1
            out.extend(range(lo, hi + step, step))
        else:
            out.append(int(part))
    return out


def cmd_eval(args, cfg: RunConfig) -> int:
    policy = cfg.policy()
    with policy.context():
        if args.tau_cm is not None:
            tau = make_field(args.tau_cm).theta(policy)
        elif args.tau is not None:
            tau = parse_complex(args.tau)
        else:
            raise UsageError("give --tau or --tau-cm")
        fn = args.function
        if fn in ("wp", "fricke", "siegel"):
            if args.r is None or args.s is None:
                raise UsageError(f"{fn} needs --r and --s")
            v = cv(Fraction(args.r), Fraction(args.s))
        if fn == "eta":
            val = eta(tau, policy)
        elif fn in ("g2", "g3"):
            val = eisenstein_g2g3(tau, policy)[0 if fn == "g2" else 1]
        elif fn == "delta":
            val = delta(tau, policy)
        elif fn == "j":
            val = j_invariant(tau, policy)
        elif fn == "wp":
            val = wp_char(v, tau, policy)
        elif fn == "fricke":
            val = fricke(v, tau, policy)
        elif fn == "siegel":
            val = siegel(v, tau, policy)
        else:
            if args.m is None or args.n is None:
                raise UsageError("h needs --m and --n")
            val = weierstrass_unit(args.m, args.n, tau, policy)
        text = to_decimal(val, policy)
    print(f"{text}  # {fn}, precision {policy.working_bits} bits")
    return EXIT_PASS


def _write(text: str, path: str | None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _certificate_text(cert: Certificate, fmt: str) -> str:
    if fmt == "json":
        return cert.to_json()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "status", "residual", "polynomial", "detail"])
        for c in cert.checks:
            w.writerow([c.name, c.status, c.residual, " ".join(c.polynomial or []), c.detail])
        return buf.getvalue()
    lines = [f"{cert.kind} {cert.inputs}: verdict {cert.verdict} (ell={cert.ell}, reps={cert.galois_reps})"]
    for c in cert.checks:
        poly = f" poly={c.polynomial}" if c.polynomial else ""
        lines.append(f"  [{c.status:4}] {c.name:28} residual={c.residual}{poly} {c.detail}".rstrip())
    return "\n".join(lines) + "\n"


def cmd_verify(args, cfg: RunConfig) -> int:
    policy = cfg.policy()
    cert = verify_pib(args.d, args.m, args.n, policy, absolute_degree=cfg.absolute or None)
    _write(_certificate_text(cert, cfg.format), cfg.out)
    if cert.rejected:
        for c in cert.checks:
            if c.status == "fail":
                print(f"invalid input: {c.name}: {c.detail}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_PASS if cert.passed else EXIT_FAIL


def _scan_one(job):
    d, m, n, prec, guard, absolute = job
    cert = verify_pib(d, m, n, PrecisionPolicy(prec, guard), absolute_degree=absolute or None)
    detail = "; ".join(f"{c.name}: {c.detail}" for c in cert.checks if c.status != "pass")
    return {"d_K": d, "m": m, "n": n, "ell": cert.ell, "verdict": cert.verdict,
            "max_residual": cert.max_residual(), "detail": detail}


def scan_rows(ds, ms, ns, cfg: RunConfig):
    """Rows sorted by (|d|, m, n); hypothesis failures become 'skipped' rows."""
    rows, jobs = [], []
    for d in sorted(set(ds), key=lambda x: (abs(x), x)):
        try:
            K = make_field(d)
        except FieldError as exc:
            log.warning("dropping d=%d: %s", d, exc)
            continue
        for m in sorted(set(ms)):
            for n in sorted(set(ns)):
                bad = check_hypotheses(K, m, n)
                if bad:
                    rows.append({"d_K": d, "m": m, "n": n, "ell": "", "verdict": "skipped",
                                 "max_residual": "", "detail": "; ".join(f"{v.name}: {v.reason}" for v in bad)})
                else:
                    jobs.append((d, m, n, cfg.prec, cfg.guard, cfg.absolute))
    workers = cfg.jobs or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            rows.extend(pool.map(_scan_one, jobs))
    else:
        rows.extend(map(_scan_one, jobs))
    rows.sort(key=lambda r: (abs(r["d_K"]), r["m"], r["n"]))
    return rows


def _rows_text(rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=SCAN_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    return "".join(
        f"{r['d_K']:>6} {r['m']:>4} {r['n']:>4}  ell={r['ell']!s:<3} {r['verdict']:8} {r['max_residual']} {r['detail']}".rstrip()
        + "\n" for r in rows)


def cmd_scan(args, cfg: RunConfig) -> int:
    try:
        ds, ms, ns = parse_int_list(args.d), parse_int_list(args.m), parse_int_list(args.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = scan_rows(ds, ms, ns, cfg)
    if not any(r["verdict"] != "skipped" for r in rows):
        log.warning("no admissible instance in the requested ranges")
    _write(_rows_text(rows, cfg.format), cfg.out)
    ok = all(r["verdict"] in ("pass", "skipped") for r in rows)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_selftest(args, cfg: RunConfig) -> int:
    names = args.suite or list(SUITES)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    policy = PrecisionPolicy(min(cfg.prec, 256), min(cfg.guard, 64)) if args.quick else cfg.policy()
    failed = set()
    for suite, label, ok, detail in run_suites(names, policy, seed=args.seed):
        print(f"{'PASS' if ok else 'FAIL'} {suite:8} {label}: {detail}")
        if not ok:
            failed.add(suite)
    if failed:
        print("failing suites: " + ", ".join(sorted(failed)), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prec", type=int, help="working precision in bits (default 512)")
    common.add_argument("--guard", type=int, help="guard bits (default 64)")
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("-o", "--out", help="output path (default stdout)")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cmunits", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common], help="evaluate a modular function")
    e.add_argument("function", choices=FUNCTIONS)
    e.add_argument("--tau", help="complex literal such as 0.5+1.2i")
    e.add_argument("--tau-cm", type=int, metavar="D", help="use theta_K for the discriminant D")
    e.add_argument("--r", help="characteristic r (rational, e.g. 1/6)")
    e.add_argument("--s", help="characteristic s (rational)")
    e.add_argument("--m", type=int)
    e.add_argument("--n", type=int)

    v = sub.add_parser("verify", parents=[common], help="certify one (d, m, n) instance")
    v.add_argument("-d", type=int, required=True)
    v.add_argument("-m", type=int, required=True)
    v.add_argument("-n", type=int, required=True)
    v.add_argument("--absolute", type=int, metavar="DEG", help="also recognize alpha itself up to degree DEG")

    s = sub.add_parser("scan", parents=[common], help="certify a grid of instances")
    s.add_argument("-d", required=True, help="discriminants, e.g. -23,-47 or -100..-3")
    s.add_argument("-m", required=True)
    s.add_argument("-n", required=True)
    s.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")
    s.add_argument("--absolute", type=int, metavar="DEG")

    t = sub.add_parser("selftest", parents=[common], help="run identity suites")
    t.add_argument("--suite", action="append", help=f"one of {', '.join(SUITES)} (repeatable)")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--quick", action="store_true", help="run at 256 bits")
    return p


COMMANDS = {"eval": cmd_eval, "verify": cmd_verify, "scan": cmd_scan, "selftest": cmd_selftest}


_NEGATIVE_VALUE = re.compile(r"^-[\d.]")
_VALUE_OPTIONS = ("-d", "--tau")


def _glue_negative_values(argv):
    """Turn '-d -23,-47' into '-d=-23,-47' so argparse does not read the value as an option."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_OPTIONS:
            nxt = next(it, None)
            if nxt is not None and _NEGATIVE_VALUE.match(nxt):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, DomainError, PrecisionError, ConsistencyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
