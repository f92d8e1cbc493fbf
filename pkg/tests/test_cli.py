import json
import os
import subprocess
import sys

import pytest

from stergm.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main

SCENARIO = {
    "n": 12,
    "steps": 60,
    "burn_in": 10,
    "replicates": 2,
    "seed": 3,
    "formation": {"terms": [{"kind": "edges"}], "theta": [-3.0]},
    "dissolution": {"terms": [{"kind": "edges"}], "theta": [1.0]},
}


@pytest.fixture
def scenario_file(tmp_path):
    def write(obj=SCENARIO, name="scenario.json"):
        p = tmp_path / name
        p.write_text(json.dumps(obj, indent=2))
        return str(p)
    return write


def test_validate_ok(scenario_file, capsys):
    assert main(["validate-config", scenario_file()]) == EXIT_OK
    assert capsys.readouterr().out.startswith("ok: n=12")


def test_validate_reports_file_and_line(scenario_file, capsys):
    path = scenario_file(dict(SCENARIO, burn_in=60))
    assert main(["validate-config", path]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert err.startswith(f"config error: {path}:3: ")
    assert "burn_in" in err


def test_missing_config_is_config_error(tmp_path):
    assert main(["validate-config", str(tmp_path / "nope.json")]) == EXIT_CONFIG


def test_simulate_writes_outputs_to_override_dir(scenario_file, tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", scenario_file(), "--out", str(out), "--seed", "9"]) == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["hazard.csv", "manifest.json", "spells.csv", "stats.json"]
    assert json.loads((out / "manifest.json").read_text())["seeds"]["scenario"]["seed"] == 9


def test_simulate_unwritable_output_is_runtime_error(scenario_file, tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["simulate", scenario_file(), "--out", str(blocker / "sub")]) == EXIT_RUNTIME
    assert capsys.readouterr().err.startswith("runtime error:")


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_simulate_read_only_dir(scenario_file, tmp_path):
    ro = tmp_path / "ro"
    ro.mkdir()
    ro.chmod(0o500)
    try:
        assert main(["simulate", scenario_file(), "--out", str(ro)]) == EXIT_RUNTIME
    finally:
        ro.chmod(0o700)


def test_pmf_to_stdout(capsys):
    assert main(["pmf", "--model", '{"kind": "geometric", "p": 0.5}', "--x-max", "3"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "x,f,F,h"
    assert [float(line.split(",")[1]) for line in lines[1:]] == pytest.approx([0.5, 0.25, 0.125], rel=1e-14)


def test_hazard_to_out_dir(tmp_path):
    model = tmp_path / "m.json"
    model.write_text('{"kind": "mixture", "omega": [0.2, 0.1], "pi": [0.9, 0.1]}')
    assert main(["hazard", "--model", str(model), "--x-max", "200", "--out", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "hazard.csv").read_text().splitlines()
    assert len(rows) == 201
    assert abs(float(rows[-1].split(",")[3]) - 0.1) < 1e-4


def test_invalid_model_is_config_error(capsys):
    assert main(["hazard", "--model", '{"kind": "geometric", "p": 2}']) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_reproduce_paper_small(tmp_path):
    out = tmp_path / "paper"
    rc = main(["reproduce-paper", "--out", str(out), "--replicates", "1", "--steps", "60", "--burn-in", "10"])
    assert rc == EXIT_OK
    names = {p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file()}
    assert {"hazard_curves.csv", "equilibrium_table.csv", "manifest.json", "B/hazard.csv"} <= names
    table = (out / "equilibrium_table.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in table[1:]] == ["I", "D", "F", "B"]


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "stergm.cli", "pmf", "--model",
                           '{"kind": "geometric", "p": 0.25}', "--x-max", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("x,f,F,h")
