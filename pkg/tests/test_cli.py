import csv
from pathlib import Path

import numpy as np
import pytest
import yaml

from cornerprobe.cli import EXIT_CHECK, EXIT_INVALID, EXIT_IO, EXIT_OK, main
from cornerprobe.forward import load_field

SCENES = Path(__file__).resolve().parents[1] / "scenes"
TETRA = str(SCENES / "tetra.yaml")


def run(*argv):
    return main([str(a) for a in argv])


def rows(path):
    return list(csv.reader(line for line in path.read_text().splitlines() if not line.startswith("#")))


@pytest.fixture(scope="module")
def tetra_data(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run("simulate", "--scene", TETRA, "--band-limit", 24, "--out", out) == EXIT_OK
    return out


def test_simulate_writes_container_and_csv(tetra_data):
    field = load_field(tetra_data / "boundary.cpbf")
    assert field.kappa == 2.0 and field.grid.L == 24
    text = (tetra_data / "boundary.csv").read_text().splitlines()
    assert text[0] == "# corner-probe v0.1.0"


def test_simulate_is_idempotent(tmp_path, tetra_data):
    assert run("simulate", "--scene", TETRA, "--band-limit", 24, "--out", tmp_path) == EXIT_OK
    assert (tmp_path / "boundary.cpbf").read_bytes() == (tetra_data / "boundary.cpbf").read_bytes()


def test_verify_passes_on_clean_data(tetra_data, capsys):
    assert run("verify", "--scene", TETRA, "--data", tetra_data / "boundary.cpbf") == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 3


def test_verify_flags_noisy_data(tmp_path, capsys):
    assert run("simulate", "--scene", TETRA, "--band-limit", 24, "--noise", "0.1", "--out", tmp_path) == EXIT_OK
    assert run("verify", "--scene", TETRA, "--data", tmp_path / "boundary.cpbf") == EXIT_CHECK
    assert "[FAIL] green identity" in capsys.readouterr().out


def test_verify_rejects_mismatched_header(tmp_path, tetra_data):
    doc = yaml.safe_load(Path(TETRA).read_text())
    doc["kappa"] = 3.0
    (tmp_path / "k3.yaml").write_text(yaml.safe_dump(doc))
    assert run("verify", "--scene", tmp_path / "k3.yaml", "--data", tetra_data / "boundary.cpbf") == EXIT_INVALID


def test_missing_and_truncated_data(tmp_path, tetra_data):
    assert run("verify", "--scene", TETRA, "--data", tmp_path / "nope.cpbf") == EXIT_IO
    raw = (tetra_data / "boundary.cpbf").read_bytes()
    (tmp_path / "cut.cpbf").write_bytes(raw[: len(raw) // 2])
    assert run("verify", "--scene", TETRA, "--data", tmp_path / "cut.cpbf") == EXIT_IO


def test_unknown_scene_key_is_invalid(tmp_path):
    doc = yaml.safe_load(Path(TETRA).read_text())
    doc["colour"] = "red"
    (tmp_path / "bad.yaml").write_text(yaml.safe_dump(doc))
    assert run("simulate", "--scene", tmp_path / "bad.yaml", "--out", tmp_path) == EXIT_INVALID


def test_cone_scan_constant_aperture(tmp_path):
    assert run("cone-scan", "--alpha", 0.8, "--out", tmp_path) == EXIT_OK
    table = rows(tmp_path / "cone_scan.csv")
    assert table[0] == ["cone", "r", "M", "M_times_r", "slope"]
    assert len(table) == 8
    assert -1.1 <= float(table[1][4]) <= -0.9


def test_cone_scan_flags_facet(tmp_path, capsys):
    assert run("cone-scan", "--alpha", np.pi / 2, "--out", tmp_path) == EXIT_CHECK
    assert "FLAG" in capsys.readouterr().out


def test_cone_scan_radii_out_of_range(tmp_path):
    assert run("cone-scan", "--alpha", 0.8, "--radii", "1/2,1/4", "--out", tmp_path) == EXIT_INVALID


def test_reconstruct_single_cell_with_reference(tmp_path, tetra_data):
    assert run("reconstruct", "--scene", TETRA, "--data", tetra_data / "boundary.cpbf", "--reference",
               "--out", tmp_path) == EXIT_OK
    table = rows(tmp_path / "report.csv")
    assert table[0][-1] == "rel_error"
    assert float(table[1][-1]) <= 0.05
    report = yaml.safe_load((tmp_path / "report.yaml").read_text())
    assert report["version"] == "0.1.0"


def test_reconstruct_refuses_overlapping_cells(tmp_path, tetra_data):
    doc = yaml.safe_load(Path(TETRA).read_text())
    doc["cells"].append(dict(doc["cells"][0], name="copy"))
    (tmp_path / "twice.yaml").write_text(yaml.safe_dump(doc))
    assert run("reconstruct", "--scene", tmp_path / "twice.yaml", "--data", tetra_data / "boundary.cpbf",
               "--out", tmp_path) == EXIT_INVALID
    assert not (tmp_path / "report.csv").exists()


def test_sweep_is_deterministic(tmp_path, tetra_data):
    args = ["sweep", "--scene", TETRA, "--data", tetra_data / "boundary.cpbf", "--noise", "1e-3,1e-2",
            "--repeats", 2]
    assert run(*args, "--out", tmp_path / "a") == EXIT_OK
    assert run(*args, "--out", tmp_path / "b") == EXIT_OK
    first = (tmp_path / "a" / "sweep.csv").read_text()
    assert first == (tmp_path / "b" / "sweep.csv").read_text()
    table = rows(tmp_path / "a" / "sweep.csv")
    assert table[0] == ["level", "seed", "eps", "max_abs_error", "max_rel_error"]
    assert table[-1][0] == "slope" and len(table) == 6


def test_sweep_needs_noise_levels(tmp_path, tetra_data):
    assert run("sweep", "--scene", TETRA, "--data", tetra_data / "boundary.cpbf", "--noise", "",
               "--out", tmp_path) == EXIT_INVALID


def test_thread_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CORNER_PROBE_THREADS", "1")
    assert run("cone-scan", "--alpha", 0.8, "--out", tmp_path) == EXIT_OK
