import csv
import json

import pytest

import metromax as mm
from metromax.cli import EXIT_CONFIG, EXIT_MODEL, EXIT_OK, main


@pytest.fixture(scope="module")
def paris_path():
    return str(mm.bundled_config("paris_line14"))


def test_eigen_agreement(paris_path, capsys):
    assert main(["eigen", "--config", paris_path, "--trains", "21"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "closed-form" in out and "spectral" in out and "simulated" in out
    assert out.count("72.0455") == 3


def test_eigen_zero_trains(paris_path, capsys):
    assert main(["eigen", "--config", paris_path, "--trains", "0"]) == EXIT_OK
    assert "infinite" in capsys.readouterr().out


def test_malformed_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["eigen", "--config", str(bad), "--trains", "5"]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_model_error_exits_3(paris_path, tmp_path, capsys):
    code = main(["instability", "--config", paris_path, "--trains", "0",
                 "--out", str(tmp_path)])
    assert code == EXIT_MODEL
    assert "model error" in capsys.readouterr().err


def test_phase_diagram_rows_and_manifest(paris_path, tmp_path):
    assert main(["phase-diagram", "--config", paris_path, "--steps", "3",
                 "--out", str(tmp_path)]) == EXIT_OK
    out = tmp_path / "phase_diagram.csv"
    with open(out) as fh:
        fh.readline()  # units comment
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    assert set(rows[0]) == {"rho", "sigma", "h", "f", "w", "g", "phase"}
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "phase-diagram"
    assert manifest["parameters"]["steps"] == 3
    first = out.read_bytes()
    main(["phase-diagram", "--config", paris_path, "--steps", "3",
          "--out", str(tmp_path)])
    assert out.read_bytes() == first  # deterministic re-run


def test_demand_sweep_csv(paris_path, tmp_path):
    assert main(["demand-sweep", "--config", paris_path, "--trains", "21",
                 "--scale", "0.5,1", "--events", "300",
                 "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "demand_sweep.csv") as fh:
        fh.readline()
        rows = list(csv.DictReader(fh))
    assert [(r["m"], r["c"]) for r in rows] == [("21", "0.5"), ("21", "1")]


def test_instability_profiles(paris_path, tmp_path, capsys):
    assert main(["instability", "--config", paris_path, "--trains", "5",
                 "--ratio", "0.1", "--events", "100",
                 "--out", str(tmp_path)]) == EXIT_OK
    assert "amplified" in capsys.readouterr().out
    assert main(["instability", "--config", paris_path, "--trains", "5",
                 "--ratio", "0.1", "--events", "100", "--profile", "controlled",
                 "--out", str(tmp_path)]) == EXIT_OK
    assert "not amplified" in capsys.readouterr().out
    header = (tmp_path / "instability.csv").read_text().splitlines()[1]
    assert header == "k,j,deviation"


def test_validate(paris_path, capsys):
    assert main(["validate", "--config", paris_path]) == EXIT_OK
    assert "OK" in capsys.readouterr().out
