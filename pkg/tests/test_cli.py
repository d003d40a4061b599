import json
from pathlib import Path

import numpy as np
import pytest

from rspog import __version__
from rspog.cli import main
from rspog.io import config_digest, read_matrix_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
EMPTY = CONFIGS / "empty_10x10.json"
SMALL = CONFIGS / "grid12_obstacle.json"
FIELD = CONFIGS / "field_460m.json"


def run(*args):
    return main([str(a) for a in args])


def test_distribution_outputs(tmp_path):
    assert run("distribution", "--config", EMPTY, "--out", tmp_path) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"distribution_matrix.csv", "distribution_long.csv", "distribution_mask.csv",
            "distribution_manifest.json"} <= names
    M = read_matrix_csv(tmp_path / "distribution_matrix.csv")
    assert M.shape == (10, 10)
    assert np.allclose(M, M.T, atol=1e-12) and np.allclose(M, M[::-1], atol=1e-12)
    assert M.sum() == pytest.approx(1.0, abs=1e-9)
    assert M[4:6, 4:6].min() == M.max()


def test_distribution_field_zero_blocks(tmp_path):
    assert run("distribution", "--config", FIELD, "--out", tmp_path) == 0
    M = read_matrix_csv(tmp_path / "distribution_matrix.csv")
    mask = read_matrix_csv(tmp_path / "distribution_mask.csv")
    assert M.shape == (47, 47)
    zero = M == 0
    assert np.array_equal(zero, mask == 0)
    from scipy.ndimage import label
    labels, count = label(zero)
    assert count == 16
    assert all((labels == k).sum() == 25 for k in range(1, 17))


def test_distribution_reference_and_edges(tmp_path):
    assert run("distribution", "--config", SMALL, "--reference", "--edges",
               "--mode", "time-weighted", "--out", tmp_path) == 0
    lines = (tmp_path / "distribution_edges.csv").read_text().splitlines()
    assert lines[0] == "x1_m,y1_m,x2_m,y2_m,probability"
    assert sum(float(r.split(",")[-1]) for r in lines[1:]) == pytest.approx(1.0, abs=1e-9)
    manifest = json.loads((tmp_path / "distribution_manifest.json").read_text())
    assert manifest["parameters"]["fast"] is False
    assert manifest["parameters"]["mode"] == "time-weighted"


def test_long_csv_format(tmp_path):
    run("distribution", "--config", SMALL, "--out", tmp_path)
    raw = (tmp_path / "distribution_long.csv").read_bytes()
    assert b"\r" not in raw
    rows = raw.decode().splitlines()
    assert rows[0] == "x_m,y_m,probability" and len(rows) == 1 + 144


def test_manifest_contents(tmp_path):
    run("coverage", "--config", EMPTY, "--out", tmp_path, "--rays", 256)
    m = json.loads((tmp_path / "coverage_manifest.json").read_text())
    assert m["config_digest"] == config_digest(EMPTY.read_bytes())
    assert m["tool_version"] == __version__
    assert m["subcommand"] == "coverage"
    assert m["parameters"]["rays"] == 256
    assert set(m["outputs"]) == {"coverage_matrix.csv", "coverage_long.csv", "coverage_mask.csv"}


def test_coverage_constant_interior(tmp_path):
    assert run("coverage", "--config", EMPTY, "--out", tmp_path) == 0
    C = read_matrix_csv(tmp_path / "coverage_matrix.csv")
    assert np.allclose(C[2:8, 2:8], np.pi * 400, rtol=1e-3)


def test_rays_too_low(tmp_path, capsys):
    assert run("coverage", "--config", EMPTY, "--out", tmp_path, "--rays", 3) == 2
    assert "64" in capsys.readouterr().err


def test_obstacle_out_of_bounds(tmp_path, write_config, capsys):
    data = json.loads(EMPTY.read_text())
    data["obstacles"] = [{"x_m": 10, "y_m": 10, "w_m": 10, "h_m": 10},
                         {"x_m": 80, "y_m": 10, "w_m": 30, "h_m": 10}]
    path = write_config(data)
    assert run("distribution", "--config", path, "--out", tmp_path / "o") == 2
    assert "obstacles[1]" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert run("distribution", "--config", tmp_path / "none.json", "--out", tmp_path) == 2


def test_bad_threads(tmp_path):
    assert run("distribution", "--config", EMPTY, "--out", tmp_path, "--threads", 0) == 2


def test_out_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("RSPOG_OUT", str(tmp_path / "envout"))
    assert run("distribution", "--config", EMPTY) == 0
    assert (tmp_path / "envout" / "distribution_matrix.csv").exists()


def test_degree_outputs(tmp_path, capsys):
    assert run("degree", "--config", EMPTY, "--out", tmp_path, "--rays", 256) == 0
    out = capsys.readouterr().out
    assert out.startswith("global_mean_degree:")
    summary = (tmp_path / "degree_summary.txt").read_text()
    assert summary == out
    D = read_matrix_csv(tmp_path / "degree_matrix.csv")
    assert (D > 0).all()


def test_simulate_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert run("simulate", "--config", SMALL, "--out", tmp_path / name, "--trips", 20000,
                   "--seed", 42, "--snapshots", 3) == 0
    files = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert "empirical_matrix.csv" in files and "empirical_degree_matrix.csv" in files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    m = json.loads((tmp_path / "a" / "simulate_manifest.json").read_text())
    assert "Philox" in m["parameters"]["rng"]


@pytest.mark.slow
def test_validate_passes(tmp_path, capsys):
    assert run("validate", "--config", SMALL, "--out", tmp_path) == 0
    assert "result: PASS" in capsys.readouterr().out
    assert (tmp_path / "validate_delta.csv").exists()


def test_validate_mismatched_modes_fails(tmp_path, capsys):
    code = run("validate", "--config", SMALL, "--out", tmp_path, "--mode", "per-trip",
               "--empirical-mode", "time-weighted", "--trips", 300000)
    out = capsys.readouterr().out
    assert code == 1 and "total_variation" in out and "result: FAIL" in out


def test_validate_two_node_world(tmp_path, write_config, capsys):
    path = write_config({"width_m": 1, "height_m": 0, "cell_size_m": 1, "radio_range_m": 1,
                         "station_count": 2, "obstacles": []})
    assert run("validate", "--config", path, "--out", tmp_path, "--trips", 1000) == 0
    assert "total_variation: 0\n" in capsys.readouterr().out


def test_validate_too_large(tmp_path, write_config, capsys):
    path = write_config({"width_m": 59, "height_m": 59, "cell_size_m": 1, "radio_range_m": 2,
                         "station_count": 10, "obstacles": []})
    assert run("validate", "--config", path, "--out", tmp_path) == 1
    assert "reference limit" in capsys.readouterr().err
