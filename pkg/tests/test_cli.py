import csv
import hashlib
import io
import json
from pathlib import Path

import pytest

from wclimit.cli import dumps, fmt_float, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_coefficients_config(tmp_path, capsys):
    code, out, _ = run(capsys, "run", CONFIGS / "coefficients.json", "--out", tmp_path)
    assert code == 0 and "PASS" in out and "FAIL" not in out
    doc = json.loads((tmp_path / "coefficients.json").read_text())
    assert doc["passed"]
    assert doc["summary"]["constants"]["gamma"] == 2.0


def test_dyson_sweep_errors_decrease(tmp_path, capsys):
    code, _, _ = run(capsys, "dyson-sweep", CONFIGS / "dyson-sweep.json", "--out", tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "dyson_sweep.csv")
    errs = [float(r["abs_err_vs_limit"]) for r in rows]
    assert len(errs) == 4 and all(a > b for a, b in zip(errs, errs[1:]))
    assert all(float(r["bound_margin"]) >= 0 for r in rows)


def test_builtin_defaults_run(tmp_path, capsys):
    for name in ("moments", "bounds", "ito-audit"):
        code, _, err = run(capsys, name, "--out", tmp_path / name)
        assert code == 0, err


def test_invalid_field_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "run", CONFIGS / "invalid-e10.json", "--out", tmp_path)
    assert code == 2
    d = json.loads(err)
    assert d["field"] == "system.E_10" and d["error"] == "ValidationError"


def test_lambda_order_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "dyson-sweep", "--lambda", "0.5", "1", "--out", tmp_path)
    assert code == 2 and json.loads(err)["field"] == "experiment.lambdas"


def test_wrong_subcommand_for_config(tmp_path, capsys):
    code, _, err = run(capsys, "bounds", CONFIGS / "moments.json", "--out", tmp_path)
    assert code == 2 and json.loads(err)["field"] == "experiment.name"


def test_divergence_exit_3(tmp_path, capsys):
    code, _, err = run(capsys, "run", CONFIGS / "divergent.json", "--out", tmp_path)
    assert code == 3 and json.loads(err)["error"] == "DivergenceError"


def test_capacity_exit_4(tmp_path, capsys):
    code, _, err = run(capsys, "moments", "--n-max", "9", "--out", tmp_path)
    assert code == 4 and json.loads(err)["error"] == "CapacityError"


def test_missing_file_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "run", tmp_path / "nope.json")
    assert code == 2 and json.loads(err)["field"] == "config"


@pytest.mark.parametrize("cfg", ["simulate.json", "simulate-coherent.json", "bounds.json", "dyson-levels.json"])
def test_determinism_and_manifest(tmp_path, capsys, cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "run", CONFIGS / cfg, "--out", a)[0] == 0
    assert run(capsys, "run", CONFIGS / cfg, "--out", b)[0] == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        if name != "manifest.json":
            assert (a / name).read_bytes() == (b / name).read_bytes(), name
    man, man_b = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    # the manifest records where it was written; everything else must match
    assert man.pop("config").pop("output") != man_b.pop("config").pop("output")
    assert man == man_b
    for name, digest in man["artifacts"].items():
        assert hashlib.sha256((a / name).read_bytes()).hexdigest() == digest
    assert len(man["config_sha256"]) == 64 and man["version"]


def test_overrides_change_hash(tmp_path, capsys):
    run(capsys, "run", CONFIGS / "simulate.json", "--out", tmp_path / "a")
    run(capsys, "run", CONFIGS / "simulate.json", "--dt", "0.02", "--out", tmp_path / "b")
    ha = json.loads((tmp_path / "a" / "manifest.json").read_text())["config_sha256"]
    hb = json.loads((tmp_path / "b" / "manifest.json").read_text())["config_sha256"]
    assert ha != hb


def test_simulate_csv_columns(tmp_path, capsys):
    run(capsys, "run", CONFIGS / "simulate.json", "--out", tmp_path)
    rows = read_csv(tmp_path / "simulate.csv")
    assert list(rows[0]) == ["step", "time", "re", "im", "obs_re", "obs_im", "defect"]
    assert [int(r["step"]) for r in rows] == list(range(1, len(rows) + 1))


def test_float_format_roundtrips():
    for x in (0.1, 1 / 3, -2.5e-300, 0.0, -0.0):
        assert float(fmt_float(x)) == x
    assert fmt_float(-0.0) == "0"
    assert json.loads(dumps({"z": 1 + 2j})) == {"z": [1.0, 2.0]}


def test_selftest_fault_injection(capsys):
    code, out, _ = run(capsys, "selftest", "--only", "8", "--fault-ito-constant", "1.5", "--no-times")
    assert code == 1 and "FAIL" in out
    code, out, _ = run(capsys, "selftest", "--only", "8", "--no-times")
    assert code == 0 and "PASS" in out
