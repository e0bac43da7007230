import json
import subprocess
import sys

import numpy as np
import pytest

from semeq.cli import main
from semeq.codebook import load_codebook
from semeq.experiment import METHODS, read_results


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({
        "p1": {"max_outer_iters": 2, "max_fw_iters": 2},
        "n_source": 30, "n_target": 90, "rho_samples": 300, "messages": 400,
        "learned_eq": {"epochs": 1}, "out_dir": str(tmp_path / "results"),
    }))
    return path


def test_build_codebook_and_inspect(tmp_path, config, capsys):
    out = tmp_path / "cb.json"
    assert main(["build-codebook", "--config", str(config), "--out", str(out)]) == 0
    assert (tmp_path / "rho.csv").exists()
    text = capsys.readouterr().out
    assert "entropy:" in text
    cb = load_codebook(out, expected_n=2)
    assert len(cb) == 10 and cb.rho.shape == (10, 10)
    assert cb.build_metadata["rho_samples_per_atom"] == 300
    rho_csv = np.loadtxt(tmp_path / "rho.csv", delimiter=",", skiprows=1)[:, 1:]
    np.testing.assert_array_equal(rho_csv, cb.rho)

    assert main(["inspect", str(out)]) == 0
    text = capsys.readouterr().out
    assert "N_P = 10" in text and "entropy:" in text and "atom 9:" in text


def test_build_codebook_radius_flag(tmp_path, config):
    out = tmp_path / "cb.json"
    assert main(["build-codebook", "--config", str(config), "--out", str(out),
                 "--radius", "0.1"]) == 0
    assert load_codebook(out).build_metadata["radius"] == 0.1


def test_gen_lang(tmp_path, config):
    assert main(["gen-lang", "--config", str(config), "--out", str(tmp_path / "g")]) == 0
    spec = json.loads((tmp_path / "g" / "languages.json").read_text())
    assert spec["kmap"] == [0, 1] * 5
    lines = (tmp_path / "g" / "source_samples.csv").read_text().splitlines()
    assert len(lines) == 1 + 10 * 30


def test_eval_single_point(tmp_path, config, capsys):
    out = tmp_path / "e.csv"
    assert main(["eval", "--config", str(config), "--out", str(out), "--snr-db", "0,10",
                 "--methods", "semcom_noeq,classcom_b"]) == 0
    rows = read_results(out)
    assert [(r["method"], r["snr_db"]) for r in rows] == [("semcom_noeq", "0.0"),
                                                          ("classcom_b", "0.0")]
    assert "accuracy" in capsys.readouterr().out


def test_sweep_one_row_per_method_and_snr(tmp_path, config):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", str(config), "--out", str(out), "--snr-db",
                 "-5,0,5,10,20", "--methods", "all"]) == 0
    rows = read_results(out)
    assert len(rows) == 5 * len(METHODS)
    assert {(r["method"], r["snr_db"]) for r in rows} == {
        (m, s) for m in METHODS for s in ("-5.0", "0.0", "5.0", "10.0", "20.0")}
    assert all(r["error"] == "" for r in rows)


def test_eval_reports_failed_point(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"methods": ["learned_linear_eq"], "messages": 50, "n_source": 10,
                               "learned_eq": {"learning_rate": 1e4, "epochs": 1}}))
    assert main(["eval", "--config", str(cfg), "--out", str(tmp_path / "e.csv")]) == 1


@pytest.mark.parametrize("argv", [
    ["inspect", "/nonexistent/cb.json"],
    ["sweep", "--methods", "magic"],
    ["build-codebook", "--config", "/nonexistent.json"],
])
def test_errors_exit_nonzero_with_diagnostic(argv, capsys):
    assert main(argv) == 1
    assert "error:" in capsys.readouterr().err


def test_bad_config_keys(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"mesages": 3}))
    assert main(["sweep", "--config", str(cfg)]) == 1
    assert "unknown config keys" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["frobnicate"], ["sweep", "--bogus"], []])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
    assert "usage:" in capsys.readouterr().err


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "semeq.cli", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0
    for cmd in ("gen-lang", "build-codebook", "eval", "sweep", "inspect"):
        assert cmd in res.stdout
