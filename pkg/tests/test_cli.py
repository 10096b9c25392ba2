import argparse
import csv
import io
import json
import logging
import subprocess
import sys

import mpmath
import pytest

from cmunits.cli import UsageError, main, parse_complex, parse_int_list, resolve_config
from cmunits.verifier import Certificate


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def ns(**kw):
    base = dict(config=None, prec=None, guard=None, out=None, format=None, jobs=None, absolute=None)
    base.update(kw)
    return argparse.Namespace(**base)


@pytest.mark.parametrize("text, expected", [
    ("2i", mpmath.mpc(0, 2)),
    ("i", mpmath.mpc(0, 1)),
    ("0.5+1.25i", mpmath.mpc(0.5, 1.25)),
    ("-0.5+i", mpmath.mpc(-0.5, 1)),
    ("0.1-2i", mpmath.mpc(0.1, -2)),
    ("3", mpmath.mpc(3, 0)),
    ("1e-1+2.5j", mpmath.mpc(0.1, 2.5)),
])
def test_parse_complex(text, expected):
    assert parse_complex(text) == expected


@pytest.mark.parametrize("text", ["", "abc", "1+*i", "1+2x"])
def test_parse_complex_rejects(text):
    with pytest.raises(UsageError):
        parse_complex(text)


def test_parse_int_list():
    assert parse_int_list("-23,-47") == [-23, -47]
    assert parse_int_list("1..4") == [1, 2, 3, 4]
    assert parse_int_list("-3..-7") == [-3, -4, -5, -6, -7]
    assert parse_int_list("6, 10..11") == [6, 10, 11]


def test_config_precedence(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("# comment\nprec = 384\nguard=40\nformat=csv\n")
    env = {"CMUNITS_PREC": "320", "CMUNITS_GUARD": "48"}
    assert (resolve_config(ns(), env).prec, resolve_config(ns(), env).guard) == (320, 48)
    c = resolve_config(ns(config=str(cfgfile)), env)
    assert (c.prec, c.guard, c.format) == (384, 40, "csv")
    c = resolve_config(ns(config=str(cfgfile), prec=256), env)
    assert (c.prec, c.guard) == (256, 40)
    assert resolve_config(ns(), {}).prec == 512
    with pytest.raises(UsageError):
        resolve_config(ns(prec=64), {})
    bad = tmp_path / "bad.cfg"
    bad.write_text("prec 12\n")
    with pytest.raises(UsageError):
        resolve_config(ns(config=str(bad)), {})


def test_eval_j_at_cm_point(capsys):
    code, out, _ = run(capsys, "eval", "j", "--tau-cm", "-23", "--prec", "256")
    assert code == 0
    val = mpmath.mpmathify(out.split("#")[0].strip().replace(" ", ""))
    assert abs(val.real + mpmath.mpf("3493225.699969933368")) < 1e-12
    assert abs(val.imag) < 1e-60


def test_eval_misc(capsys):
    code, out, _ = run(capsys, "eval", "h", "--m", "6", "--n", "1", "--tau", "2i")
    assert code == 0 and out.startswith("(1.0 + 0.0j)")
    code, out, _ = run(capsys, "eval", "j", "--tau", "i", "--prec", "256")
    assert code == 0 and out.startswith("(1728.0 ")
    code, out, _ = run(capsys, "eval", "siegel", "--tau", "2i", "--r", "1/3", "--s", "0", "--prec", "256")
    assert code == 0
    assert run(capsys, "eval", "j", "--tau", "0")[0] == 2
    assert run(capsys, "eval", "wp", "--tau", "2i")[0] == 2
    assert run(capsys, "eval", "j")[0] == 2
    assert run(capsys, "eval", "nonsense", "--tau", "i")[0] == 2
    assert run(capsys, "eval", "j", "--tau=-0.5+1.5i", "--prec", "256")[0] == 0
    assert run(capsys, "eval", "j", "--tau", "-0.5+1.5i", "--prec", "256")[0] == 0


def test_verify_exit_codes_and_certificate_file(capsys, tmp_path):
    path = tmp_path / "cert.json"
    code, out, _ = run(capsys, "verify", "-d", "-23", "-m", "6", "-n", "2", "-o", str(path))
    assert code == 0 and out == ""
    cert = Certificate.from_json(path.read_text())
    assert cert.verdict == "pass" and cert.inputs["precision_bits"] == 512
    code, out, err = run(capsys, "verify", "-d", "-23", "-m", "10", "-n", "3", "--prec", "256")
    assert code == 2 and "hypothesis_ii" in err
    assert json.loads(out)["verdict"] == "fail"
    code, _, err = run(capsys, "verify", "-d", "-12", "-m", "6", "-n", "2")
    assert code == 2 and "field" in err


def test_verify_csv_and_text(capsys):
    code, out, _ = run(capsys, "verify", "-d", "-23", "-m", "6", "-n", "1", "--prec", "256", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["name"] == "field" and all(r["status"] == "pass" for r in rows)
    code, out, _ = run(capsys, "verify", "-d", "-23", "-m", "6", "-n", "1", "--prec", "256", "--format", "text")
    assert code == 0 and "verdict pass" in out


def test_scan_rows(capsys, caplog):
    with caplog.at_level(logging.WARNING, logger="cmunits"):
        code, out, _ = run(capsys, "scan", "-d", "-23,-7,-12", "-m", "6", "-n", "1..2",
                           "--jobs", "2", "--format", "csv", "--prec", "512")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(r["d_K"], r["n"], r["verdict"]) for r in rows] == [
        ("-7", "1", "skipped"), ("-7", "2", "skipped"), ("-23", "1", "pass"), ("-23", "2", "pass")]
    assert "hypothesis_ii" in rows[0]["detail"]
    assert any("dropping d=-12" in r.message for r in caplog.records)


def test_scan_json_and_no_admissible(capsys, caplog):
    with caplog.at_level(logging.WARNING, logger="cmunits"):
        code, out, _ = run(capsys, "scan", "-d", "-7", "-m", "6", "-n", "1", "--format", "json")
    assert code == 0
    assert json.loads(out)[0]["verdict"] == "skipped"
    assert any("no admissible instance" in r.message for r in caplog.records)
    assert run(capsys, "scan", "-d", "x", "-m", "6", "-n", "1")[0] == 2


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest", "--suite", "delta", "--suite", "jseries", "--quick")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines and all(l.startswith("PASS") for l in lines)
    assert {l.split()[1] for l in lines} == {"delta", "jseries"}
    assert run(capsys, "selftest", "--suite", "bogus")[0] == 2


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "cmunits.cli", "eval", "j", "--tau", "i", "--prec", "256"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("(1728.0 ")
    res = subprocess.run([sys.executable, "-m", "cmunits.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify" in res.stdout
