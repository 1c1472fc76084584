import json
import math
import subprocess
import sys

import numpy as np
import pytest

from xyconv import cli
from xyconv.io import (
    GRID_COLUMNS,
    ConfigError,
    fmt,
    parse_number,
    parse_number_list,
    read_config,
    read_grid_csv,
    run_id,
)


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_parse_number_expressions():
    assert parse_number("0.25") == 0.25
    assert parse_number("sqrt(3)/2") == math.sqrt(3) / 2
    assert parse_number("sqrt(15) / 4") == math.sqrt(15) / 4
    assert parse_number("-2**-1") == -0.5
    assert parse_number("pi") == math.pi
    assert parse_number_list("1, sqrt(7)/4;0.5") == [1.0, math.sqrt(7) / 4, 0.5]
    for bad in ("__import__('os')", "sqrt", "1 +", "exp(1)"):
        with pytest.raises(ConfigError):
            parse_number(bad)


def test_fmt_round_trips():
    rng = np.random.default_rng(0)
    for x in np.concatenate([rng.standard_normal(100), [0.1, 1 / 3, 1e-300, 2.0**60]]):
        assert float(fmt(x)) == x


def test_read_flat_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("# sweep\nL = 8\ngamma = [1.0, sqrt(3)/2]\nh-step = 0.01  # comment\npolicy = \"lowest\"\n")
    cfg = read_config(path)
    assert cfg == {"L": "8", "gamma": "1.0, sqrt(3)/2", "h_step": "0.01", "policy": "lowest"}
    (tmp_path / "bad.txt").write_text("L 8\n")
    with pytest.raises(ConfigError):
        read_config(tmp_path / "bad.txt")
    with pytest.raises(ConfigError):
        read_config(tmp_path / "missing.txt")


def test_run_id_is_stable_and_sensitive():
    a = run_id("scan", {"L": 8, "h_step": 0.01}, "0.1.0")
    assert a == run_id("scan", {"h_step": 0.01, "L": 8}, "0.1.0")
    assert a != run_id("scan", {"L": 8, "h_step": 0.02}, "0.1.0")
    assert len(a) == 16


def test_scan_writes_grid_and_manifest(tmp_path):
    out = tmp_path / "scan"
    assert run("scan", "--L", 8, "--gamma", 1.0, "--h-min", 0, "--h-max", 1.5, "--h-step", 0.01, "--out", out) == 0
    lines = (out / "grid.csv").read_text().splitlines()
    assert lines[0].startswith("# run_id=")
    assert lines[1] == ",".join(GRID_COLUMNS)
    rows = read_grid_csv(out / "grid.csv")
    assert len(rows) == 151
    assert {r["locc"] for r in rows} <= {"down", "up", "incomp", "equal"}
    assert {r["degenerate"] for r in rows} <= {"0", "1"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert lines[0] == f"# run_id={manifest['run_id']}"
    assert manifest["config"]["L"] == 8
    assert manifest["config"]["delta"] == 0.01
    assert manifest["config"]["policy"] == "lowest"
    assert manifest["failures"] == 0
    assert manifest["wall_clock_seconds"] >= 0
    assert manifest["version"] == cli.__version__


def test_scan_is_reproducible_from_its_manifest(tmp_path):
    args = ("scan", "--L", 6, "--gamma", "sqrt(3)/2", 1.0, "--h-max", 0.6, "--h-step", 0.02)
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    assert run("scan", "--config", tmp_path / "a" / "manifest.json", "--out", tmp_path / "c") == 0
    ref = (tmp_path / "a" / "grid.csv").read_bytes()
    assert (tmp_path / "b" / "grid.csv").read_bytes() == ref
    assert (tmp_path / "c" / "grid.csv").read_bytes() == ref


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("L = 6\ngamma = 0.5\nh_min = 0\nh_max = 0.2\nh_step = 0.1\n")
    assert run("scan", "--config", cfg, "--h-max", 0.4, "--out", tmp_path) == 0
    assert len(read_grid_csv(tmp_path / "grid.csv")) == 5


def test_invalid_chain_length_exits_two(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text("L = 1\ngamma = 1.0\n")
    assert run("scan", "--config", cfg, "--out", tmp_path) == 2
    err = capsys.readouterr().err
    assert "2 <= L" in err and "L=1" in err


@pytest.mark.parametrize(
    "argv",
    [
        ("scan", "--gamma", 1.0),
        ("scan", "--L", 8, "--gamma", 1.5),
        ("scan", "--L", 8, "--gamma", 1.0, "--h-step", 0),
        ("scan", "--L", 8, "--gamma", 1.0, "--block", "0,2"),
        ("scan", "--L", 8.5, "--gamma", 1.0),
        ("renyi", "--L", 8, "--gamma", 1.0),
        ("majorization", "--a", "0.5,0.5"),
        ("scaling", "--gamma", 1.0, "--L", 8, 10, 12),
        ("scaling", "--gamma", 1.0, "--kind", "zeroth"),
    ],
)
def test_validation_errors_exit_two(argv, tmp_path, capsys):
    assert run(*argv, "--out", tmp_path) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_scaling_needs_four_sizes_message(tmp_path, capsys):
    assert run("scaling", "--gamma", "sqrt(3)/2", "--L", 8, 10, 12, "--out", tmp_path) == 2
    assert "at least 4" in capsys.readouterr().err


def test_solver_failures_above_budget_exit_three(tmp_path, monkeypatch, capsys):
    from xyconv import sweep

    real = sweep.solve_state

    def flaky(params, *args, **kwargs):
        if params.h > 0.3:
            raise sweep.ConvergenceError("forced", 1.0, 5000)
        return real(params, *args, **kwargs)

    monkeypatch.setattr(sweep, "solve_state", flaky)
    assert run("scan", "--L", 6, "--gamma", 1.0, "--h-max", 0.5, "--h-step", 0.05, "--out", tmp_path) == 3
    assert "failed to converge" in capsys.readouterr().err
    rows = read_grid_csv(tmp_path / "grid.csv")
    assert rows[-1]["locc"] == "fail"
    assert json.loads((tmp_path / "manifest.json").read_text())["failures"] > 0


def test_renyi_curves(tmp_path):
    assert run("renyi", "--L", 8, "--gamma", 1.0, "--h", 0.5, 0.6, "--out", tmp_path) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["outputs"] == ["renyi_h0.5.csv", "renyi_h0.6.csv"]
    curves = []
    for name in manifest["outputs"]:
        lines = (tmp_path / name).read_text().splitlines()
        assert lines[0] == f"# run_id={manifest['run_id']}"
        assert lines[1] == "alpha,S"
        rows = [line.split(",") for line in lines[2:]]
        labels = [r[0] for r in rows]
        assert labels[0] == "0+" and "1" in labels and labels[-1] == "inf"
        curves.append(np.array([float(r[1]) for r in rows]))
    diff = curves[0] - curves[1]
    assert diff.max() > 0 > diff.min()


def test_renyi_product_point_is_all_zero(tmp_path):
    assert run("renyi", "--L", 8, "--gamma", "sqrt(3)/2", "--h", 0.5, "--policy", "min_entanglement",
               "--out", tmp_path) == 0
    lines = (tmp_path / "renyi_h0.5.csv").read_text().splitlines()[2:]
    assert max(abs(float(line.split(",")[1])) for line in lines) < 1e-6


def test_majorization_from_spectra(capsys):
    assert run("majorization", "--a", "0.8,0.15,0.05", "--b", "0.7,0.2,0.1") == 0
    assert capsys.readouterr().out.strip() == "A_MAJORIZES_B"


def test_majorization_from_params(tmp_path, capsys):
    assert run("majorization", "--L", 8, "--gamma", 1.0, "--h", 1.4, "--delta", 0.005, "--out", tmp_path) == 0
    assert capsys.readouterr().out.strip() in ("down", "up")
    lines = (tmp_path / "majorization.csv").read_text().splitlines()
    assert lines[1] == "l,f_l_h,f_l_h_plus_delta"
    assert len(lines) == 2 + 4
    assert float(lines[-1].split(",")[1]) == pytest.approx(1.0)


def test_sign_map_command(tmp_path):
    assert run("sign-map", "--L", 6, "--gamma", 1.0, "--h-min", 1.2, "--h-max", 1.3, "--h-step", 0.05,
               "--alpha-count", 4, "--out", tmp_path) == 0
    lines = (tmp_path / "sign_map.csv").read_text().splitlines()
    assert lines[1] == "gamma,h,alpha,sign"
    rows = [line.split(",") for line in lines[2:]]
    assert len(rows) == 3 * 7
    assert {r[3] for r in rows if r[2] != "0+"} == {"-1"}


def test_scaling_first_order_samples(tmp_path):
    assert run("scaling", "--gamma", "sqrt(3)/2", "--L", 4, 6, 8, 10, "--kind", "first_order",
               "--h-min", 0.47, "--h-max", 0.53, "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "scaling.json").read_text())
    assert doc["kind"] == "first_order"
    assert [s["L"] for s in doc["samples"]] == [4, 6, 8, 10]
    assert all(abs(s["h_c"] - 0.5) <= 0.005 for s in doc["samples"])
    assert doc["fit"]["h_inf"] == pytest.approx(doc["samples"][0]["h_c"], abs=1e-9)
    assert doc["residual_rms"] < 1e-9
    assert doc["run_id"] == json.loads((tmp_path / "manifest.json").read_text())["run_id"]


def test_scaling_fit_failure_exits_four(tmp_path, capsys):
    # no first-order boundary in a window deep in the paramagnet: nothing to fit
    assert run("scaling", "--gamma", 1.0, "--L", 4, 6, 8, 10, "--kind", "first_order",
               "--h-min", 1.3, "--h-max", 1.35, "--h-step", 0.025, "--out", tmp_path) == 4
    assert "scaling fit failed" in capsys.readouterr().err


def test_workers_flag_sets_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("XYCONV_WORKERS", "1")
    assert run("scan", "--L", 4, "--gamma", 1.0, "--h-max", 0.1, "--h-step", 0.05, "--workers", 2,
               "--out", tmp_path) == 0
    import os

    assert os.environ["XYCONV_WORKERS"] == "2"
    assert "workers" not in json.loads((tmp_path / "manifest.json").read_text())["config"]


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "xyconv", "--version"], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.strip() == f"xyconv {cli.__version__}"
