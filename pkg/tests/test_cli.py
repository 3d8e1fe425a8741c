"""Tests for the command-line front end."""

import csv
import io
import json

import numpy as np
import pytest

from polytope_capacity.cli import run
from polytope_capacity.const import (
    EXIT_BUDGET,
    EXIT_HYPOTHESIS,
    EXIT_MALFORMED,
    EXIT_OK,
    EXIT_VERIFICATION,
)

SQUARE = {
    "dim": 2,
    "halfspaces": [
        {"normal": [1, 0], "offset": 1},
        {"normal": [0, 1], "offset": 1},
        {"normal": [-1, 0], "offset": 1},
        {"normal": [0, -1], "offset": 1},
    ],
}
SHIFTED_SQUARE = {"dim": 2, "vertices": [[2, -1], [4, -1], [4, 1], [2, 1]]}
MINUS_I = {"dim": 2, "rows": [[-1, 0], [0, -1]]}


@pytest.fixture
def write_json(tmp_path):
    def _write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture
def square_file(write_json):
    return write_json("square.json", SQUARE)


def _report(capsys):
    return json.loads(capsys.readouterr().out)


def test_lr_report(square_file, capsys):
    assert run(["lr", square_file, "--k", "0"]) == EXIT_OK
    report = _report(capsys)
    assert report["capacity"] == "lr"
    assert report["value"] == pytest.approx(2.0, abs=1e-9)
    assert report["mode"] == "exact"
    assert report["perm_budget"] is None
    assert report["seed"] == 0
    assert report["permutations"] == 24
    assert len(report["input_digest"]) == 64
    assert report["certificate"]["beta"] == pytest.approx([0.25, 0.5, 0.25, 0.0])
    assert report["verification"]["boundary_residual"] <= 1e-8


def test_ehz_report(square_file, capsys):
    assert run(["ehz", square_file]) == EXIT_OK
    report = _report(capsys)
    assert report["value"] == pytest.approx(4.0, abs=1e-9)
    assert report["certificate"]["sigma"] == [0, 1, 2, 3]
    assert report["verification"]["action"] == pytest.approx(4.0, abs=1e-9)


def test_psi_report(square_file, write_json, capsys):
    psi = write_json("psi.json", MINUS_I)
    assert run(["psi-ehz", square_file, "--psi", psi]) == EXIT_OK
    assert _report(capsys)["value"] == pytest.approx(2.0, abs=1e-9)


def test_cut_experiment_report(square_file, capsys):
    assert run(["cut-experiment", square_file, "--line=-1,1,0"]) == EXIT_OK
    report = _report(capsys)
    assert report["margin"] == pytest.approx(1.0, abs=1e-6)
    assert report["values"]["lower"] == pytest.approx(0.5, abs=1e-6)
    assert report["holds"] is True
    assert report["expected_sign"] == 1


def test_cut_sweep_report(square_file, capsys):
    args = ["cut-experiment", square_file, "--line", "1,0,0", "--sweep", "0.5,1.5"]
    assert run(args) == EXIT_OK
    sweep = _report(capsys)["sweep"]
    assert sweep[0]["margin"] == pytest.approx(0.0, abs=1e-6)
    assert "skipped" in sweep[1]


def test_oracle_report(square_file, capsys):
    assert run(["oracle", square_file, "--which", "lr"]) == EXIT_OK
    report = _report(capsys)
    assert report["capacity"] == "oracle:lr"
    assert report["value"] == pytest.approx(2.0)


def test_csv_output(square_file, capsys):
    assert run(["ehz", square_file, "--format", "csv"]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["input", "capacity", "value", "mode", "seed"]
    assert rows[1][0] == square_file
    assert rows[1][1] == "ehz"
    assert float(rows[1][2]) == pytest.approx(4.0, abs=1e-9)


def test_thread_count_does_not_change_report(square_file, capsys):
    assert run(["ehz", square_file, "--threads", "1"]) == EXIT_OK
    one = _report(capsys)
    assert run(["ehz", square_file, "--threads", "2"]) == EXIT_OK
    two = _report(capsys)
    one.pop("workers")
    two.pop("workers")
    assert one == two


def test_hypothesis_violation_exit_code(write_json, capsys):
    shifted = write_json("shifted.json", SHIFTED_SQUARE)
    psi = write_json("psi.json", MINUS_I)
    assert run(["psi-ehz", shifted, "--psi", psi]) == EXIT_HYPOTHESIS
    assert capsys.readouterr().out == ""
    assert run(["cut-experiment", shifted, "--line", "0,1,2"]) == EXIT_HYPOTHESIS


def test_malformed_input_exit_code(write_json, tmp_path):
    bad = write_json("bad.json", {**SQUARE, "name": "square"})
    assert run(["ehz", bad]) == EXIT_MALFORMED
    assert run(["ehz", str(tmp_path / "missing.json")]) == EXIT_MALFORMED
    odd = write_json("odd.json", {"dim": 3, "vertices": [[0, 0, 0]] * 4})
    assert run(["ehz", odd]) == EXIT_MALFORMED


def test_budget_exit_code(write_json):
    angles = 2 * np.pi * np.arange(9) / 9
    nonagon = write_json(
        "nonagon.json",
        {"dim": 2, "vertices": np.column_stack([np.cos(angles), np.sin(angles)]).tolist()},
    )
    assert run(["ehz", nonagon]) == EXIT_BUDGET


def test_random_mode_report(square_file, capsys):
    args = ["ehz", square_file, "--mode", "random", "--perm-budget", "50", "--seed", "4"]
    assert run(args) == EXIT_OK
    report = _report(capsys)
    assert report["perm_budget"] == 50
    assert report["permutations"] == 50
    assert report["value"] == pytest.approx(4.0, abs=1e-9)


def test_emit_path_then_verify(square_file, tmp_path, capsys):
    path_file = tmp_path / "path.json"
    args = ["lr", square_file, "--k", "0", "--emit-path", str(path_file)]
    assert run(args) == EXIT_OK
    first = _report(capsys)["verification"]
    assert run(["verify", str(path_file), square_file]) == EXIT_OK
    second = _report(capsys)
    assert second["value"] == pytest.approx(2.0, abs=1e-9)
    for key, value in first.items():
        assert second["verification"][key] == pytest.approx(value, abs=1e-12)


def test_verify_rejects_bad_path(square_file, write_json, capsys):
    path = {
        "total_time": 4.0,
        "start": [1.1, -1.0],
        "segments": [
            {"length": 0.25, "velocity": [0.0, 8.0], "facet": 0},
            {"length": 0.25, "velocity": [-8.0, 0.0], "facet": 1},
            {"length": 0.25, "velocity": [0.0, -8.0], "facet": 2},
            {"length": 0.25, "velocity": [8.0, 0.0], "facet": 3},
        ],
    }
    pathfile = write_json("path.json", path)
    assert run(["verify", pathfile, square_file]) == EXIT_VERIFICATION
    report = _report(capsys)
    assert report["verification"]["facet_residual"] == pytest.approx(0.1, abs=1e-9)


def test_verify_path_without_origin(write_json, tmp_path, capsys):
    moved = write_json("moved.json", {"dim": 2, "vertices": [[3, -1], [5, -1], [5, 1], [3, 1]]})
    path_file = tmp_path / "path.json"
    assert run(["ehz", moved, "--emit-path", str(path_file)]) == EXIT_OK
    capsys.readouterr()
    raw = json.loads(path_file.read_text(encoding="utf-8"))
    for key in ("origin", "schema", "boundary"):
        raw.pop(key)
    bare = write_json("bare.json", raw)
    assert run(["verify", bare, moved]) == EXIT_OK
    report = _report(capsys)
    assert report["value"] == pytest.approx(4.0, abs=1e-9)
    assert report["verification"]["hstar_error"] <= 1e-8
