import json

import numpy as np
import pytest

from cxrestrict.cli import run
from cxrestrict.curves import OffspringCurve
from cxrestrict.schema import ConfigError, curve_to_json, parse_curve, parse_polynomial

CURVE = {"d": 3, "phi": {"coeffs": [0, 0, 0, 0, [0.5, 0.1], 0.2]}}


def write(path, obj):
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(path)


def test_parse_polynomial_forms():
    p = parse_polynomial({"coeffs": [1, [0, 2]]})
    np.testing.assert_array_equal(p.coeffs, [1, 2j])
    q = parse_polynomial({"roots": [0, [1, 1]], "leading": 2})
    assert abs(q(1) - 2 * 1 * (-1j)) < 1e-14


@pytest.mark.parametrize(
    "obj,key",
    [
        ({"phi": {"coeffs": [1]}}, "curve.d"),
        ({"d": 3}, "curve.phi"),
        ({"d": 3, "phi": {"coefs": [1]}}, "curve.phi.coefs"),
        ({"d": 3, "phi": {"coeffs": [1, "x"]}}, "curve.phi.coeffs[1]"),
        ({"d": 1, "phi": {"coeffs": [1]}}, "curve.d"),
        ({"d": 3, "phi": {"coeffs": [1]}, "shifts": [0.5]}, "curve.shifts"),
        ({"d": 3, "phi": {"coeffs": [1]}, "extra": 1}, "curve.extra"),
    ],
)
def test_parse_curve_errors_name_key(obj, key):
    with pytest.raises(ConfigError) as exc:
        parse_curve(obj)
    assert exc.value.key == key


def test_curve_roundtrip():
    c = parse_curve({**CURVE, "shifts": [0, [0.1, 0]]})
    assert isinstance(c, OffspringCurve)
    assert parse_curve(curve_to_json(c)).shifts == c.shifts


def test_selftest(tmp_path, capsys):
    assert run(["selftest", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 8


def test_sublevel_outputs(tmp_path):
    assert run(["verify-sublevel", "--d", "3", "--samples", "1e6", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "verify-sublevel.csv").read_text().splitlines()
    assert lines[0] == "u,measure,hits,dropped" and len(lines) == 17
    summary = json.loads((tmp_path / "verify-sublevel.json").read_text())
    assert summary["seed"] == 0 and summary["config"]["samples"] == 1_000_000
    assert summary["result"]["slope"] > 4 / 3 - 0.05


def test_same_seed_byte_identical(tmp_path):
    curve = write(tmp_path / "c.json", {**CURVE, "shifts": [0, 0.3]})
    for k in ("a", "b"):
        assert run(["verify-torsion", "--curve", curve, "--samples", "30000", "--seed", "11", "--out", str(tmp_path / k)]) == 0
    a = (tmp_path / "a" / "verify-torsion.csv").read_bytes()
    b = (tmp_path / "b" / "verify-torsion.csv").read_bytes()
    assert a == b
    run(["verify-torsion", "--curve", curve, "--samples", "30000", "--seed", "12", "--out", str(tmp_path / "c")])
    assert (tmp_path / "c" / "verify-torsion.csv").read_bytes() != a


def test_flags_override_config(tmp_path):
    write(tmp_path / "c.json", CURVE)
    cfg = write(tmp_path / "cfg.json", {"curve": "c.json", "samples": 1000, "seed": 4})
    assert run(["verify-torsion", "--config", cfg, "--samples", "2000", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "verify-torsion.json").read_text())
    assert summary["config"]["samples"] == 2000 and summary["seed"] == 4
    assert summary["result"]["samples"] == 2000


def test_malformed_curve_exit_2(tmp_path, capsys):
    bad = write(tmp_path / "bad.json", {"d": 3, "phi": {"coefs": [1, 2]}})
    assert run(["verify-torsion", "--curve", bad, "--out", str(tmp_path)]) == 2
    assert "curve.phi.coefs" in capsys.readouterr().err
    broken = write(tmp_path / "broken.json", "{\"d\": 3,")
    assert run(["verify-torsion", "--curve", broken, "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize(
    "argv,key",
    [
        (["verify-sublevel", "--samples", "0"], "samples"),
        (["verify-sublevel", "--u-grid", ""], "u_grid"),
        (["verify-torsion"], "curve"),
        (["verify-torsion", "--curve", "/nonexistent/c.json"], "curve"),
        (["extension-scan", "--mode", "other"], "mode"),
    ],
)
def test_config_errors(tmp_path, capsys, argv, key):
    assert run(argv + ["--out", str(tmp_path)]) == 2
    assert f"config error: {key}" in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    cfg = write(tmp_path / "cfg.json", {"samples": 10, "sampels": 3})
    assert run(["verify-sublevel", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "sampels" in capsys.readouterr().err


def test_unknown_subcommand():
    assert run(["bogus"]) == 2


def test_violation_exit_1(tmp_path):
    # a weight-growth tolerance of zero cannot be met in floating point
    assert run(["verify-weight-growth", "--tol", "0", "--N", "5", "--out", str(tmp_path)]) == 1
    assert (tmp_path / "verify-weight-growth.csv").exists()


def test_decompose_and_d3(tmp_path):
    curve = write(tmp_path / "c.json", CURVE)
    assert run(["decompose", "--curve", curve, "--radius", "0.5", "--samples", "20000", "--out", str(tmp_path)]) == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["cells"]
    assert run(["verify-jacobian-d3", "--curve", curve, "--radius", "0.5", "--samples", "50", "--out", str(tmp_path)]) == 0
    header = (tmp_path / "verify-jacobian-d3.csv").read_text().splitlines()[0]
    assert header.startswith("inequality_id,cell,root_index")


def test_other_commands(tmp_path):
    curve = write(tmp_path / "c.json", CURVE)
    out = ["--out", str(tmp_path)]
    assert run(["verify-jacobian-monomial", "--samples", "5000"] + out) == 0
    assert run(["verify-weight-optimality", "--curve", curve, "--a", "0.5+0.2j"] + out) == 0
    assert run(["verify-weight-optimality", "--curve", curve, "--a", "0"] + out) == 2
    assert run(["extension-scan", "--d", "3", "--N", "4"] + out) == 0
    assert run(["extension-scan", "--mode", "lambda", "--curve", curve, "--lambdas", "5,10"] + out) == 0
    rows = (tmp_path / "extension-scan.csv").read_text().splitlines()
    assert rows[0] == "grid,probe_id,abs_value,converged" and len(rows) == 3


def test_low_degree_curve_exit_2(tmp_path, capsys):
    curve = write(tmp_path / "c.json", {"d": 3, "phi": {"roots": [0, 1]}})
    assert run(["verify-torsion", "--curve", curve, "--out", str(tmp_path)]) == 2
    assert "curve.phi" in capsys.readouterr().err
