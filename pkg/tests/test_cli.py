import argparse
import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from admflux.cli import main, parse_radii

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def _write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_compute_writes_csv(tmp_path, capsys):
    out = tmp_path / "j.csv"
    assert main(["compute", str(SCENARIOS / "minkowski_J.json"), "--out", str(out), "--exact"]) == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0][:4] == ["quantity", "axis", "r", "value"]
    j3 = [r for r in rows[1:] if r[0] == "J" and r[1] == "3"]
    assert len(j3) == 4 and all(r[6] == "finite" for r in j3)
    assert abs(float(j3[0][4]) - 2 / 231) < 1e-6


def test_compute_json_to_stdout(capsys):
    assert main(["compute", str(SCENARIOS / "center_of_mass.json"), "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    c2 = [r for r in doc["results"] if r["quantity"] == "C" and r["axis"] == 2][0]
    assert c2["exact"] == "-1/5" and c2["agrees"] is True


def test_expect_finite_flags_divergence(capsys):
    path = str(SCENARIOS / "divergent_example.json")
    assert main(["compute", path]) == 0
    capsys.readouterr()
    assert main(["compute", path, "--expect-finite"]) == 2
    assert "divergent" in capsys.readouterr().err


def test_expect_finite_passes_for_finite_scenario(tmp_path):
    assert main(["compute", str(SCENARIOS / "minkowski_J.json"), "--expect-finite", "--out", str(tmp_path / "o")]) == 0


def test_invalid_scenario_is_error(tmp_path, capsys):
    p = _write(tmp_path, {"quantities": ["Z"]})
    assert main(["compute", str(p)]) == 1
    assert "quantities" in capsys.readouterr().err
    assert main(["compute", str(tmp_path / "absent.json")]) == 1


def test_runtime_error_carries_scenario_context(tmp_path, capsys):
    # the graph r * x1 is not spacelike at large radius
    p = _write(tmp_path, {"graph": [{"power": "1", "A": "2*x1"}], "quantities": ["E"], "radii": [10.0, 20.0, 40.0]})
    with pytest.warns(Warning):
        code = main(["compute", str(p)])
    assert code == 1
    err = capsys.readouterr().err
    assert "SpacelikeViolationError" in err and str(p) in err


def test_sweep_uses_log_spaced_radii(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", str(SCENARIOS / "minkowski_J.json"), "--radii", "100:10000:3", "--out", str(out)]) == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    radii = sorted({float(r[2]) for r in rows[1:]})
    assert radii == pytest.approx([100.0, 1000.0, 10000.0])


def test_parse_radii():
    assert parse_radii("1:100:3") == pytest.approx((1.0, 10.0, 100.0))
    for bad in ("1:100", "a:b:c", "10:1:3", "1:10:1", "0:10:3"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_radii(bad)


def test_usage_errors_exit_with_one(capsys):
    for argv in (["compute"], ["sweep", "x.json", "--radii", "bad"], ["frobnicate"], []):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 1


def test_verify_filtered_rows(capsys):
    assert main(["verify", "--filter", "exact"]) == 0
    out = capsys.readouterr().out
    assert "exact-J" in out and "exact-C" in out and "PASS" in out


def test_verify_unknown_filter(capsys):
    assert main(["verify", "--filter", "nothing-matches"]) == 1


def test_verify_low_degree_fails(capsys):
    assert main(["verify", "--filter", "minkowski-J", "--degree", "4", "--max-degree", "6"]) == 2
    assert "FAIL" in capsys.readouterr().out


def test_module_entry_point_exit_codes(tmp_path):
    ok = subprocess.run([sys.executable, "-m", "admflux.cli", "verify", "--filter", "exact-C"], capture_output=True, text=True)
    assert ok.returncode == 0, ok.stderr
    bad = subprocess.run([sys.executable, "-m", "admflux.cli", "compute"], capture_output=True, text=True)
    assert bad.returncode == 1 and "usage" in bad.stderr
