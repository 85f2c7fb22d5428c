import csv
import json
import subprocess
import sys
import warnings
from pathlib import Path

import numpy as np
import pytest

from ccfcompare.ccf import LagGrid
from ccfcompare.cli import main
from ccfcompare.ingest import read_manifest
from ccfcompare.simulate import Var1Spec, theoretical_var1_ccf

FIXTURES = Path(__file__).parent / "fixtures"


def read_results(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def region_manifest(tmp_path_factory):
    out = tmp_path_factory.mktemp("region_data")
    assert main(["simulate", "--scenario", str(FIXTURES / "region_effect.json"),
                 "--out", str(out)]) == 0
    return out / "manifest.csv"


def run_test(manifest, out, *extra):
    return main(["test", "--manifest", str(manifest), "--out", str(out), "-B", "200",
                 "--seed", "7", *extra])


def test_region_effect_detected(region_manifest, tmp_path):
    code = run_test(region_manifest, tmp_path, "--compare", "region=NAc vs DS",
                    "--compare", "sex=F vs M | region=NAc",
                    "--measures", "velocity,accel_signed", "--measures", "velocity",
                    "--measures", "accel_signed")
    assert code == 0
    rows = read_results(tmp_path / "results.csv")
    assert [r["measures"] for r in rows[:3]] == ["velocity+accel_signed", "velocity", "accel_signed"]
    assert len(rows) == 6
    for row in rows[:3]:
        assert row["comparison"] == "region=NAc vs DS"
        assert float(row["p_int"]) < 0.01
    assert len(list(tmp_path.glob("*_pointwise.csv"))) == 6
    assert len(list(tmp_path.glob("*.json"))) == 6


def test_golden_headers(region_manifest, tmp_path):
    assert run_test(region_manifest, tmp_path, "--compare", "region=NAc vs DS") == 0
    header = (tmp_path / "results.csv").read_text().splitlines()[0]
    assert header == (FIXTURES / "golden_results_header.csv").read_text().strip()
    pointwise = next(tmp_path.glob("*_pointwise.csv")).read_text().splitlines()
    assert pointwise[0] == "lag_seconds,t_n" and len(pointwise) == 42
    report = json.loads(next(tmp_path.glob("*.json")).read_text())
    assert list(report) == (FIXTURES / "golden_report_keys.txt").read_text().split()


def test_rerun_byte_identical(region_manifest, tmp_path):
    args = ("--compare", "region=NAc vs DS", "--compare", "condition=lipid vs rest")
    assert run_test(region_manifest, tmp_path / "a", *args) == 0
    assert run_test(region_manifest, tmp_path / "b", *args, "--jobs", "2") == 0
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_nothing_to_do(region_manifest, tmp_path, capsys):
    assert main(["test", "--manifest", str(region_manifest), "--out", str(tmp_path)]) == 4
    assert "nothing to do" in capsys.readouterr().err


def test_config_file_then_flags(region_manifest, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"manifest": str(region_manifest), "comparisons": ["region=NAc vs DS"],
                               "measures": ["velocity"], "bootstrap": 30, "seed": 1,
                               "out": str(tmp_path / "from_config")}))
    assert main(["test", "--config", str(cfg), "--seed", "9"]) == 0
    rep = json.loads(next((tmp_path / "from_config").glob("*.json")).read_text())
    assert rep["bootstrap_B"] == 30 and rep["seed"] == 9 and rep["measures"] == ["velocity"]


def test_output_dir_env(region_manifest, tmp_path, monkeypatch):
    monkeypatch.setenv("CCFCOMPARE_OUTPUT_DIR", str(tmp_path / "env_out"))
    assert main(["test", "--manifest", str(region_manifest), "--compare", "region=NAc vs DS",
                 "-B", "20"]) == 0
    assert (tmp_path / "env_out" / "results.csv").exists()


def test_underpowered_exit(region_manifest, tmp_path, capsys):
    code = run_test(region_manifest, tmp_path, "--compare",
                    "sex=F vs M | region=NAc, condition=lipid")
    assert code == 4
    assert "validation failed" in capsys.readouterr().err


def test_flat_scenario_bootstrap_p_one(tmp_path):
    assert main(["simulate", "--scenario", str(FIXTURES / "null_flat.json"),
                 "--out", str(tmp_path / "data")]) == 0
    assert run_test(tmp_path / "data" / "manifest.csv", tmp_path / "out",
                    "--compare", "region=NAc vs DS") == 0
    row = read_results(tmp_path / "out" / "results.csv")[0]
    assert float(row["p_max"]) == 1.0


def test_generated_files_reparse_cleanly(tmp_path):
    assert main(["simulate", "--scenario", str(FIXTURES / "var_paths.json"),
                 "--out", str(tmp_path)]) == 0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ds = read_manifest(tmp_path / "manifest.csv")
    assert list(ds.records) == ["g0_s000"]


def test_invalid_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "curves", "groups": [{"labels": {}, "n": 2}]}))
    assert main(["simulate", "--scenario", str(bad), "--out", str(tmp_path / "o")]) == 4
    assert "schema" in capsys.readouterr().err


@pytest.fixture(scope="module")
def var_manifest(tmp_path_factory):
    out = tmp_path_factory.mktemp("var_data")
    assert main(["simulate", "--scenario", str(FIXTURES / "var_paths.json"), "--out", str(out)]) == 0
    return out / "manifest.csv"


def read_curve(path):
    rows = read_results(path)
    return np.array([float(r["lag_seconds"]) for r in rows]), np.array([float(r["rho"]) for r in rows])


def test_ccf_dopamine_self(var_manifest, tmp_path):
    out = tmp_path / "c.csv"
    assert main(["ccf", "--manifest", str(var_manifest), "--session", "g0_s000",
                 "--measure", "dopamine", "--out", str(out)]) == 0
    lags, rho = read_curve(out)
    assert rho[lags == 0.0][0] == pytest.approx(1.0, abs=1e-14)


def test_ccf_velocity_matches_var_theory(var_manifest, tmp_path):
    out = tmp_path / "v.csv"
    assert main(["ccf", "--manifest", str(var_manifest), "--session", "g0_s000",
                 "--measure", "velocity", "--out", str(out)]) == 0
    _, rho = read_curve(out)
    sc = json.loads((FIXTURES / "var_paths.json").read_text())["groups"][0]
    theory = theoretical_var1_ccf(Var1Spec(sc["A"], sc["Sigma"]), LagGrid(), 20.0).rho
    assert np.max(np.abs(rho - theory)) < 0.05


def test_ccf_unknown_session(var_manifest, tmp_path, capsys):
    assert main(["ccf", "--manifest", str(var_manifest), "--session", "nope",
                 "--measure", "velocity", "--out", str(tmp_path / "x.csv")]) == 4
    assert "unknown session" in capsys.readouterr().err


def test_missing_manifest_names_path(tmp_path, capsys):
    missing = tmp_path / "absent.csv"
    assert main(["ccf", "--manifest", str(missing), "--session", "a",
                 "--measure", "velocity", "--out", str(tmp_path / "x.csv")]) == 3
    assert str(missing) in capsys.readouterr().err


def test_degenerate_exit_code(tmp_path):
    lags = LagGrid(-1, 1, 5).values
    rows = []
    rng = np.random.default_rng(0)
    for k in range(6):
        vals = rng.standard_normal(5)
        vals[2] = 0.5 if k < 3 else -0.5  # no spread at lag 0 but different means
        lines = ["lag_seconds,velocity"] + [f"{h},{v}" for h, v in zip(lags.tolist(), vals.tolist())]
        (tmp_path / f"c{k}.csv").write_text("\n".join(lines) + "\n")
        rows.append(f"c{k},c{k}.csv,20,{'NAc' if k < 3 else 'DS'}")
    (tmp_path / "m.csv").write_text("session_id,file,sample_rate_hz,region\n" + "\n".join(rows) + "\n")
    code = main(["test", "--manifest", str(tmp_path / "m.csv"), "--out", str(tmp_path / "o"),
                 "--compare", "region=NAc vs DS", "--measures", "velocity", "--grid-size", "5",
                 "-B", "10"])
    assert code == 5


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ccfcompare", "test", "--manifest",
                           str(tmp_path / "none.csv"), "--compare", "a=b vs c",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 3
    assert "none.csv" in proc.stderr
