"""CLI subcommands against the committed scenario fixture."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest
from click.testing import CliRunner

from chainweave.cli import main
from chainweave.journal import read_journal

SCENARIO = Path(__file__).parent.parent / "fixtures" / "scenario"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def scenario_copy(tmp_path) -> Path:
    target = tmp_path / "scenario"
    shutil.copytree(SCENARIO, target)
    return target


def test_validate_scenario_ok(runner):
    result = runner.invoke(main, ["validate", str(SCENARIO / "project.json")])
    assert result.exit_code == 0, result.output
    assert "ok" in result.output


def test_validate_missing_link_exit_2(runner, scenario_copy):
    project_path = scenario_copy / "project.json"
    doc = json.loads(project_path.read_text())
    doc["graph"]["links"] = [l for l in doc["graph"]["links"] if l["id"] != "l04"]
    project_path.write_text(json.dumps(doc))
    result = runner.invoke(main, ["validate", str(project_path)])
    assert result.exit_code == 2
    assert "MISSING_LINK" in result.output
    assert "t_sheet->t_vaoct" in result.output


def test_validate_nonexistent_project(runner):
    result = runner.invoke(main, ["validate", "/nonexistent/project.json"])
    assert result.exit_code != 0


def test_run_writes_journal(runner, scenario_copy):
    journal_path = scenario_copy / "out" / "journal.jsonl"
    result = runner.invoke(
        main,
        [
            "run", str(scenario_copy / "project.json"),
            "--script", str(scenario_copy / "walk.json"),
            "--journal", str(journal_path),
        ],
    )
    assert result.exit_code == 0, result.output
    journal = read_journal(journal_path)
    assert len(journal) == 11
    assert (scenario_copy / "compositions" / "summary-1.json").exists()
    artifacts = journal_path.with_suffix(".jsonl.artifacts")
    capture_refs = {c.image_ref for r in journal for c in r.captures}
    for ref in capture_refs:
        assert (artifacts / f"{ref}.bin").exists()


def test_run_bad_walk_exit_3(runner, scenario_copy):
    walk = scenario_copy / "bad_walk.json"
    walk.write_text(json.dumps({"actions": [{"enter": "s9"}]}))
    result = runner.invoke(
        main,
        [
            "run", str(scenario_copy / "project.json"),
            "--script", str(walk),
            "--journal", str(scenario_copy / "out.jsonl"),
        ],
    )
    assert result.exit_code == 3
    assert "not a start step" in result.output


def test_replay_golden_exit_0(runner):
    result = runner.invoke(
        main,
        [
            "replay", str(SCENARIO / "project.json"),
            str(SCENARIO / "golden" / "journal.jsonl"),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "identical" in result.output


def test_replay_tampered_journal_exit_4(runner, scenario_copy):
    journal_path = scenario_copy / "golden" / "journal.jsonl"
    lines = journal_path.read_text().splitlines()
    tampered = []
    for line in lines:
        event = json.loads(line)
        if event["event"] == "transfer" and event["link"] == "l04":
            event["outHash"] = "0" * 64
        tampered.append(json.dumps(event))
    journal_path.write_text("\n".join(tampered) + "\n")
    result = runner.invoke(
        main,
        ["replay", str(scenario_copy / "project.json"), str(journal_path)],
    )
    assert result.exit_code == 4
    assert "divergence" in result.output.lower()


def test_export_summary(runner, scenario_copy, tmp_path):
    out = tmp_path / "export"
    result = runner.invoke(
        main,
        [
            "export-summary", str(scenario_copy / "project.json"), "summary-1",
            "--out-dir", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    assert (out / "summary-1.png").exists()
    manifest = json.loads((out / "summary-1.manifest.json").read_text())
    assert len(manifest["placements"]) == 2
    steps = {p["step"] for p in manifest["placements"]}
    assert steps == {"s6", "s7"}


def test_tool_ping(runner):
    result = runner.invoke(
        main,
        ["tool", "ping", "t_sheet", "--project", str(SCENARIO / "project.json")],
    )
    assert result.exit_code == 0, result.output
    assert "handshake ok" in result.output


def test_tool_ping_unknown(runner):
    result = runner.invoke(
        main,
        ["tool", "ping", "t_ghost", "--project", str(SCENARIO / "project.json")],
    )
    assert result.exit_code == 3
