import io
import json
import math
import pathlib
import subprocess
import sys

import jsonschema
import pytest

from distint.cli import (
    EXIT_NEGATIVE, EXIT_OK, EXIT_UNDECIDED, EXIT_USAGE, RunConfig, UsageError, exit_code, resolve_config, run,
)

SCHEMA = json.loads((pathlib.Path(__file__).parents[1] / "docs" / "report.schema.json").read_text())


def call(*argv, env=None):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), env={} if env is None else env, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def call_json(*argv, env=None):
    code, out, err = call(*argv, "--json", env=env)
    assert code != EXIT_USAGE, err
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return code, doc


def test_step_series_example():
    code, doc = call_json("integrate", "step(cn=(-1)^n*n*(n+1))", "--from", "0", "--to", "1")
    assert code == EXIT_OK and doc["status"] == "Finite"
    assert doc["value"] == pytest.approx(-0.5, abs=1e-4)
    assert doc["tool"] == "distint" and doc["version"] and doc["config"]["tol"] == 1e-8


def test_chirp_point_value_example():
    code, doc = call_json("pointvalue", "chirp(a=0,alpha=-3,beta=1,sin)", "--at", "0")
    assert code == EXIT_OK and doc["status"] == "Exists" and abs(doc["value"]) <= 1e-4


def test_positive_divergence_example():
    code, doc = call_json("integrate", "pow(alpha=-1)", "--from", "0", "--to", "1")
    assert code == EXIT_NEGATIVE and doc["status"] == "PlusInfinity"
    assert doc["value"] is None  # non-finite numbers serialize as null


def test_no_value_exit():
    code, doc = call_json("pointvalue", "indicator(0,1)", "--at", "0")
    assert code == EXIT_NEGATIVE and doc["status"] == "NoValue"


@pytest.mark.parametrize("argv", [
    ("improper", "exp(-x^2)", "--from", "0", "--direction", "+inf"),
    ("lateral", "indicator(0,1)", "--at", "0", "--side", "left"),
    ("fourier", "periodic(2*pi; poly(1.5707963267948966,-0.5))", "--coeffs", "2000", "--at", "pi/2"),
    ("phifield", "indicator(0,1)", "--grid-x=-1:1:3", "--grid-t", "1:0.01:3"),
    ("verdict", "0", "--delta=-1,0,0", "--from=-1", "--to", "1"),
    ("moments", "exp(-x^2)", "--from=-10", "--to", "10", "--orders", "0,2"),
    ("reconstruct", "poly(0,2)", "--from", "0", "--to", "1", "--order", "1", "--grid-x", "0.5,1"),
    ("mvt", "exp(x)", "--from", "0", "--to", "1", "--psi", "poly(1)", "--kind", "first"),
])
def test_every_operation_emits_a_valid_report(argv):
    code, doc = call_json(*argv)
    assert code == exit_code(doc["status"])
    assert doc["command"] == argv[0]


def test_trace_is_reported():
    _, doc = call_json("integrate", "chirp(alpha=-3,beta=1,sin)", "--from", "0", "--to", "1", "--trace")
    assert doc["value"] == pytest.approx(math.cos(1) - math.sin(1), abs=1e-6)
    assert any(t["strategy"] == "reduce" for t in doc["trace"])


def test_reports_are_byte_identical():
    argv = ("integrate", "chirp(alpha=-1.5,beta=1,cos)*indicator(0,1) + exp(x)", "--from", "-1", "--to", "1",
            "--json", "--trace")
    first, second = call(*argv), call(*argv)
    assert first == second and first[0] == EXIT_OK


def test_csv_output():
    code, out, _ = call("moments", "exp(-x^2)", "--from=-10", "--to", "10", "--orders", "0,1", "--csv")
    rows = out.strip().splitlines()
    assert code == EXIT_OK and len(rows) == 3
    assert float(rows[1].split(",")[1]) == pytest.approx(math.sqrt(math.pi), abs=1e-8)


def test_parse_error_is_a_usage_error():
    code, out, err = call("integrate", "chirp(alpha=-3,beta=1,sin", "--from", "0", "--to", "1")
    assert code == EXIT_USAGE and out == ""
    assert "^" in err


@pytest.mark.parametrize("argv", [
    ("frobnicate", "1"),
    ("integrate", "1", "--from", "0"),
    ("integrate", "1", "--from", "0", "--to", "1", "--tol", "-1"),
    ("integrate", "1", "--from", "0", "--to", "1", "--mesh-ratio", "1.5"),
    ("phifield", "1", "--grid-x", "0:1", "--grid-t", "1,0.5"),
    ("verdict", "1", "--kernel", "gauss", "--from", "0", "--to", "1"),
])
def test_usage_errors(argv):
    assert call(*argv)[0] == EXIT_USAGE


def test_exit_mapping_is_exhaustive():
    assert exit_code("Finite") == exit_code("Exists") == exit_code("Converged") == EXIT_OK
    for s in ("NotIntegrable", "NoValue", "Diverged", "PlusInfinity", "MinusInfinity"):
        assert exit_code(s) == EXIT_NEGATIVE
    assert exit_code("Inconclusive") == EXIT_UNDECIDED
    with pytest.raises(KeyError):
        exit_code("Bogus")


def test_config_precedence(tmp_path):
    cfg = tmp_path / "distint.cfg"
    cfg.write_text("# defaults for this project\ntol = 1e-6\nk_max = 3\noutput = json\n")
    assert resolve_config({}, {}, None) == RunConfig()
    c = resolve_config({}, {}, str(cfg))
    assert (c.tol, c.k_max, c.output) == (1e-6, 3, "json")
    c = resolve_config({}, {"DISTINT_TOL": "1e-7", "DISTINT_KMAX": "4"}, str(cfg))
    assert (c.tol, c.k_max) == (1e-7, 4)
    c = resolve_config({"tol": 1e-9, "k_max": None}, {"DISTINT_TOL": "1e-7"}, str(cfg))
    assert (c.tol, c.k_max) == (1e-9, 3)


def test_config_file_and_env_through_run(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("tol=1e-6\n")
    _, doc = call_json("integrate", "1", "--from", "0", "--to", "1", "--config", str(cfg),
                       env={"DISTINT_KMAX": "2"})
    assert doc["config"]["tol"] == 1e-6 and doc["config"]["k_max"] == 2


def test_bad_config_values(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(UsageError):
        resolve_config({}, {}, str(bad))
    with pytest.raises(UsageError):
        resolve_config({}, {"DISTINT_TOL": "tiny"})
    assert call("integrate", "1", "--from", "0", "--to", "1", env={"DISTINT_TOL": "tiny"})[0] == EXIT_USAGE


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "distint.cli", "pointvalue", "indicator(0,1)", "--at", "0.5"],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == EXIT_OK
    assert "Exists" in proc.stdout
