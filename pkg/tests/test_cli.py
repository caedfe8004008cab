"""cli: commands, exit codes, output contracts."""

import json
import os
import re

import pytest

from ldl import OnePopGame, game_from_json, game_to_json
from ldl.cli import main
from gamegen import TECH, TWO_STRATEGY


@pytest.fixture()
def tech_path(tmp_path):
    p = tmp_path / "tech.json"
    p.write_text(game_to_json(TECH))
    return str(p)


@pytest.fixture()
def two_path(tmp_path):
    p = tmp_path / "two.json"
    p.write_text(game_to_json(TWO_STRATEGY))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_passes_tech(tech_path, capsys):
    code, out, _ = run(capsys, "validate", tech_path)
    assert code == 0
    assert "coordination" in out and "True" in out


def test_validate_malformed_json_is_io_error(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{"type": "one_population", payoffs: [[1]]}')
    code, _, err = run(capsys, "validate", str(p))
    assert code == 1
    assert re.search(r"line \d+, column \d+", err)


def test_validate_missing_file_is_io_error(capsys):
    code, _, err = run(capsys, "validate", "/nonexistent/game.json")
    assert code == 1


def test_validate_non_coordination_game_fails(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(game_to_json(OnePopGame([[1, 0], [2, 3]])))  # A11 <= A21
    code, out, _ = run(capsys, "validate", str(p))
    assert code == 2
    assert "coordination" in out


def test_exit_limit_output(tech_path, capsys):
    code, out, _ = run(capsys, "exit", tech_path, "--convention", "1", "--limit")
    assert code == 0
    assert "3.51562" in out
    assert re.search(r"limit\s+1\s+3.51562", out)
    # 1-based argmin label
    rows = [l for l in out.splitlines() if l.startswith("limit")]
    assert rows and rows[0].split()[4] == "2"


def test_exit_oracle_csv_digits(tech_path, capsys):
    code, out, _ = run(
        capsys, "exit", tech_path, "--convention", "1", "--oracle",
        "--n", "9", "--format", "csv",
    )
    assert code == 0
    line = [l for l in out.splitlines() if l.startswith("exit,9")][0]
    cost = line.split(",")[3]
    assert len(cost.replace(".", "").replace("-", "").lstrip("0")) >= 12


def test_exit_guardrail_exit_code(tech_path, capsys, monkeypatch):
    monkeypatch.setenv("LDL_GUARDRAIL_STATES", "5")
    code, _, err = run(
        capsys, "exit", tech_path, "--convention", "1", "--oracle", "--n", "30"
    )
    assert code == 3
    assert "LDL_GUARDRAIL_STATES" in err


def test_exit_reduced_rejects_incompatible_rules(tech_path, capsys):
    code, _, err = run(
        capsys, "exit", tech_path, "--convention", "1", "--reduced",
        "--n", "6", "--rule", "uniform",
    )
    assert code == 2
    assert "one-population logit" in err


def test_exit_intentional_on_one_population_fails_cleanly(tech_path, capsys):
    code, _, err = run(
        capsys, "exit", tech_path, "--convention", "1", "--limit",
        "--rule", "intentional",
    )
    assert code == 2


def test_exit_csv_byte_identical(tech_path, tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for target in (a, b):
        code = main([
            "exit", tech_path, "--convention", "1", "--reduced",
            "--n", "6,9,12", "--format", "csv", "--out", str(target),
        ])
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


def test_stability_invariant_trace_monotone(two_path, capsys):
    code, out, _ = run(
        capsys, "stability", two_path, "--n", "8", "--beta", "1,2,4,8",
        "--invariant", "--format", "csv",
    )
    assert code == 0
    masses = [
        float(l.split(",")[3])
        for l in out.splitlines()
        if l.startswith("invariant_mass")
    ]
    assert len(masses) == 4
    assert all(b > a for a, b in zip(masses, masses[1:]))
    assert masses[-1] > 0.5


def test_stability_oracle_roots(two_path, capsys):
    code, out, _ = run(
        capsys, "stability", two_path, "--oracle", "--n", "12",
        "--format", "json",
    )
    assert code == 0
    doc = json.loads(out)
    roots = [r for r in doc["arborescence"]["rows"] if r["field"] == "roots"]
    assert roots[0]["value"] == "1"
    assert doc["oracle_costs"]["provenance"] == "oracle n=12"


def test_bargain_command(capsys):
    code, out, _ = run(
        capsys, "bargain", "--frontier", "1,3,0.5", "--delta", "0.01",
        "--mode", "unintentional",
    )
    assert code == 0
    assert re.search(r"m_star", out)
    assert " 200 " in out or "200" in out.split()


def test_sweep_command_csv(capsys):
    code, out, _ = run(
        capsys, "sweep", "--frontier", "1,3,0.5", "--deltas", "0.1,0.05,0.01",
        "--mode", "intentional", "--format", "csv",
    )
    assert code == 0
    lines = [l for l in out.splitlines() if l.startswith("sweep")]
    assert len(lines) == 3
    errors = [float(l.split(",")[5]) for l in lines]
    assert errors[-1] <= 0.05


def test_json_game_round_trip_through_cli(tech_path, tmp_path, capsys):
    text = open(tech_path).read()
    game = game_from_json(text)
    assert game_to_json(game) == game_to_json(game_from_json(game_to_json(game)))
