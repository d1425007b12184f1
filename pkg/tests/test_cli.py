import json
import subprocess
import sys

import numpy as np
import pytest

from ftsfa.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from ftsfa.export import read_csv, read_grid

SADDLE = {"pulse": {"intensity": 1.5e14, "cycles": 2},
          "target": {"n": [5]},
          "saddle": {"ell_step": 0.1, "trajectory_samples": 11}}

CEP = {"pulse": {"intensity": 1.5e14, "cycles": 2, "cep_grid": {"start": 0, "stop": 3.14159, "count": 4}},
       "target": {"n": [4, 5]},
       "model": {"incoherent": True}}

TDSE = {"pulse": {"intensity": 1.5e14, "cycles": 2, "cep_grid": {"start": 0, "stop": 3.14159, "count": 4}},
        "target": {"n": [4]},
        "tdse": {"r_max": 80.0, "n_grid": 3200, "ell_max": 4, "n_report_max": 4,
                 "modes": ["full", "damped"], "gammas": [0.5]}}


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def test_saddle_outputs_are_deterministic(tmp_path):
    cfg = write(tmp_path, "s.json", SADDLE)
    assert main(["saddle", "--config", str(cfg), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["saddle", "--config", str(cfg), "--out", str(tmp_path / "b")]) == EXIT_OK
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["saddle_families.csv", "saddle_roots.csv", "saddle_summary.json", "saddle_trajectories.csv"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = json.loads((tmp_path / "a" / "saddle_summary.json").read_text())
    info = summary["per_n"]["5"]
    assert info["critical_ell"] == pytest.approx(4.51, abs=0.01)
    assert info["alpha_beta_collision_ell"] is None
    meta, header, rows = read_csv(tmp_path / "a" / "saddle_families.csv")
    assert meta["config_hash"] == summary["config_hash"]
    assert {r[3] for r in rows} >= {"alpha", "beta"}
    assert all(float(r[-1]) < 1e-10 for r in rows)
    _, _, traj = read_csv(tmp_path / "a" / "saddle_trajectories.csv")
    assert len(traj) == 2 * 5 * 11


def test_cep_and_compare(tmp_path):
    cfg = write(tmp_path, "c.json", CEP)
    out = tmp_path / "cep"
    assert main(["cep", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    for name in ("model_angular_only", "model_full_wavefunction", "model_full_wavefunction_incoherent"):
        g = read_grid(out / f"{name}.csv")
        assert g.values.shape == (4, 2, 5) and np.all(np.isfinite(g.values))
    summary = json.loads((out / "cep_summary.json").read_text())
    assert summary["missing_cells"] == 0 and "mode_difference" in summary
    model = out / "model_full_wavefunction.csv"
    rc = main(["compare", "--model", str(model), "--tdse", str(model), "--out", str(tmp_path / "cmp")])
    assert rc == EXIT_OK
    report = json.loads((tmp_path / "cmp" / "compare_report.json").read_text())
    assert report["per_n"]["5"]["trace_correlation"] == pytest.approx(1.0)
    assert not report["per_n"]["5"]["ell_disagreement"]


def test_tdse_command(tmp_path):
    cfg = write(tmp_path, "t.json", TDSE)
    out = tmp_path / "tdse"
    assert main(["tdse", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    summary = json.loads((out / "tdse_summary.json").read_text())
    assert [r["mode"] for r in summary["runs"]] == ["full", "damped"]
    assert abs(summary["runs"][0]["norm"] - 1) < 1e-6
    _, header, rows = read_csv(out / "tdse_bars.csv")
    assert header == ["mode", "gamma", "n", "ell", "population"]
    grid = read_grid(out / "tdse_grid.csv")
    assert grid.source == "tdse" and grid.ns == [1, 2, 3, 4]
    assert np.all(np.isfinite(grid.values))
    assert grid.values[:, 0, 1:].max() == 0.0  # no ℓ >= 1 in n = 1
    chk = json.loads((out / "tdse_checkpoint.json").read_text())
    assert chk["basis_digest"] == grid.meta["basis_digest"]


def test_exit_codes(tmp_path, capsys):
    assert main(["saddle"]) == EXIT_CONFIG
    assert main(["saddle", "--preset", "fig9"]) == EXIT_CONFIG
    assert main(["bogus"]) == EXIT_CONFIG
    assert main(["saddle", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG
    cfg = write(tmp_path, "bad.json", {"pulse": {"intensity": 1e14}, "extra": 1})
    assert main(["saddle", "--config", str(cfg)]) == EXIT_CONFIG
    cfg = write(tmp_path, "s.json", SADDLE)
    assert main(["saddle", "--config", str(cfg), "--preset", "fig1"]) == EXIT_CONFIG
    assert main(["saddle", "--config", str(cfg), "--threads", "0"]) == EXIT_CONFIG
    assert main(["compare", "--model", str(tmp_path / "x.csv"), "--tdse", str(tmp_path / "y.csv")]) == EXIT_CONFIG
    coarse = dict(TDSE, tdse={"r_max": 80.0, "n_grid": 400, "ell_max": 1, "n_report_max": 4})
    cfg = write(tmp_path, "coarse.json", coarse)
    assert main(["tdse", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_NUMERIC
    assert "refine the grid" in capsys.readouterr().err


def test_misaligned_compare_is_config_error(tmp_path):
    a = write(tmp_path, "a.json", dict(CEP, target={"n": [4]}))
    b = write(tmp_path, "b.json", dict(CEP, target={"n": [4]},
                                       pulse=dict(CEP["pulse"], cep_grid=[0.0, 1.0])))
    assert main(["cep", "--config", str(a), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["cep", "--config", str(b), "--out", str(tmp_path / "b")]) == EXIT_OK
    rc = main(["compare", "--model", str(tmp_path / "a" / "model_angular_only.csv"),
               "--tdse", str(tmp_path / "b" / "model_angular_only.csv"), "--out", str(tmp_path / "c")])
    assert rc == EXIT_CONFIG


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "ftsfa.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "saddle" in res.stdout
