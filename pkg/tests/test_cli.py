import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from critgrad import cli
from critgrad.config import ConfigError, config_hash, load, validate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=2) if isinstance(cfg, dict) else cfg)
    return path


def _run(*args):
    return cli.main([str(a) for a in args])


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    load(path)


def test_solve_zero_lambda(tmp_path):
    cfg = _write(tmp_path, {"problem": "1d-basic", "resolution": 65, "solver": {"lambda": 0.0}})
    assert _run("solve", "--config", cfg, "--out", tmp_path / "o") == 0
    text = (tmp_path / "o" / "verdicts.txt").read_text()
    assert text.startswith("# critgrad ") and "jacobian_signature: 1" in text
    data = np.loadtxt(tmp_path / "o" / "solution.csv", delimiter=",", skiprows=2)
    assert data[0, -1] == 0 and data[-1, -1] == 0


def test_solve_beyond_fold_exits_2(tmp_path):
    cfg = _write(tmp_path, {"problem": "1d-basic", "resolution": 65,
                            "solver": {"lambda": 10.0, "above_ground": True}})
    assert _run("solve", "--config", cfg, "--out", tmp_path / "o") == 2


def test_config_errors_exit_1(tmp_path, capsys):
    bad = _write(tmp_path, '{\n  "problem": "1d-basic",\n  "solvr": {}\n}\n')
    assert _run("solve", "--config", bad, "--out", tmp_path) == 1
    err = capsys.readouterr().err
    assert "solvr" in err and "line 3" in err
    broken = _write(tmp_path, '{"problem": "1d-basic",', "broken.json")
    assert _run("solve", "--config", broken, "--out", tmp_path) == 1
    eps = _write(tmp_path, {"problem": "2d-basic", "harnack": {"epsilon": 0.0}}, "eps.json")
    assert _run("harnack", "--config", eps, "--out", tmp_path) == 1
    missing = _write(tmp_path, {"problem": "no-such-benchmark"}, "missing.json")
    assert _run("continue", "--config", missing, "--out", tmp_path) == 1


def test_invalid_coefficients_exit_3(tmp_path):
    cfg = {"problem": {"lower": [0], "upper": [1], "c_plus": "x", "c_minus": "x",
                       "mu": 1, "h": 0, "mu1": 0.5, "buffer_epsilon": 0.1},
           "resolution": 33}
    assert _run("solve", "--config", _write(tmp_path, cfg), "--out", tmp_path) == 3


def test_config_hash_ignores_output():
    a = validate({"problem": "1d-basic", "output": "x"})
    b = validate({"problem": "1d-basic", "output": "y"})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({"problem": "1d-basic", "resolution": 33})
    with pytest.raises(ConfigError):
        validate({"problem": "1d-basic", "continuation": {"initial_step": -1}})


def test_continue_is_deterministic(tmp_path):
    cfg = _write(tmp_path, {"problem": "1d-basic", "resolution": 65})
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        assert _run("continue", "--config", cfg, "--out", o) == 0
    for name in ("branch.csv", "bifurcation.svg", "summary.txt"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    header = (outs[0] / "branch.csv").read_text().splitlines()[:2]
    assert header[0].startswith("# critgrad 0.1.0 config-sha256 ")
    assert "lambda" in header[1]


def test_harnack_small(tmp_path):
    cfg = _write(tmp_path, {"problem": "2d-basic", "seed": 1,
                            "harnack": {"samples": 4, "resolutions": [33],
                                        "epsilon_grid": [0.5, 1.0],
                                        "properties": ["gisl"], "property_instances": 10}})
    assert _run("harnack", "--config", cfg, "--out", tmp_path / "o", "--threads", 2) == 0
    rows = (tmp_path / "o" / "harnack.csv").read_text().splitlines()
    assert rows[1].split(",")[:3] == ["sample_id", "seed", "inequality"]
    assert len(rows) == 2 + 4
    for name in ("harnack.svg", "epsilon_scan.csv", "properties.csv", "summary.txt"):
        assert (tmp_path / "o" / name).exists()


def test_certify_1d(tmp_path):
    cfg = _write(tmp_path, {"problem": "1d-basic", "resolution": 65,
                            "certify": {"local_bounds": False}})
    assert _run("certify", "--config", cfg, "--out", tmp_path) == 0
    assert "verdict: pass" in (tmp_path / "certificate.txt").read_text()
    assert (tmp_path / "witnesses.csv").exists()


def test_entry_point_version():
    out = subprocess.run([sys.executable, "-m", "critgrad.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "critgrad" in out.stdout
