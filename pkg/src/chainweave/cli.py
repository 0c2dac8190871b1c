"""Command line interface.

Exit codes: 0 ok, 2 validation findings, 3 runtime failure, 4 replay
divergence.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .compose import SummaryComposition, export_composite, place_capture
from .data import BlobData, DataArtifact
from .engine import ExecutionEngine, replay as replay_journal
from .errors import ChainweaveError, ReplayDivergence
from .graph import validate_graph
from .host import SubprocessToolHost
from .journal import Session, StepStatus, read_journal, write_journal
from .layout import Region
from .project import (
    canonical_json,
    load_input_artifacts,
    load_project,
    read_artifact,
    write_artifact,
)
from .workflow import validate_workflow

EXIT_OK = 0
EXIT_FINDINGS = 2
EXIT_RUNTIME = 3
EXIT_DIVERGENCE = 4


@click.group()
def main():
    """Workflow-driven tool orchestration."""


def _load(project_path: str):
    return load_project(project_path, validate=False)


def _print_findings(label: str, findings) -> int:
    for f in findings:
        click.echo(f"{label}: {f.code} {f.subject} {f.message}".rstrip())
    return len(findings)


@main.command()
@click.argument("project_path", type=click.Path(exists=True))
def validate(project_path: str):
    """Validate a project's workflow and coordination graph."""
    try:
        project = _load(project_path)
    except ChainweaveError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    count = _print_findings("workflow", validate_workflow(project.workflow).findings)
    count += _print_findings(
        "graph", validate_graph(project.workflow, project.graph).findings
    )
    if count:
        click.echo(f"{count} finding(s)")
        sys.exit(EXIT_FINDINGS)
    click.echo("ok")
    sys.exit(EXIT_OK)


def _apply_walk_action(engine: ExecutionEngine, action: dict, compositions: dict) -> None:
    if "enter" in action:
        engine.enter_step(str(action["enter"]))
    elif "note" in action:
        engine.add_note(str(action["note"]))
    elif "capture" in action:
        spec = action["capture"]
        engine.add_capture(label=str(spec.get("label", "")), tool_id=spec.get("tool"))
    elif "update-capture" in action:
        engine.update_capture(str(action["update-capture"]["capture"]))
    elif "remove-capture" in action:
        engine.remove_capture(str(action["remove-capture"]))
    elif "status" in action:
        spec = action["status"]
        if isinstance(spec, str):
            session = engine.session
            assert session is not None and session.current_seq is not None
            engine.set_status(session.current_seq, StepStatus(spec))
        else:
            engine.set_status(int(spec["seq"]), StepStatus(spec["status"]))
    elif "compose" in action:
        spec = action["compose"]
        compositions[str(spec["id"])] = SummaryComposition(
            id=str(spec["id"]),
            canvas=(int(spec["canvas"][0]), int(spec["canvas"][1])),
            title=str(spec.get("title", "")),
        )
    elif "place" in action:
        spec = action["place"]
        composition = compositions[str(spec["composition"])]
        session = engine.session
        assert session is not None
        x, y, w, h = (float(v) for v in spec["region"])
        place_capture(composition, session, str(spec["capture"]), Region(x, y, w, h))
    else:
        raise ChainweaveError(f"unknown walk action {sorted(action)!r}")


@main.command()
@click.argument("project_path", type=click.Path(exists=True))
@click.option("--script", "script_path", required=True, type=click.Path(exists=True),
              help="Walk file with ordered step entries, notes, and captures.")
@click.option("--journal", "journal_path", default=None, type=click.Path(),
              help="Where to write the session journal (default sessions/walk.jsonl).")
@click.option("--screen", default="1920x1080", help="Screen size as WIDTHxHEIGHT.")
def run(project_path: str, script_path: str, journal_path: str | None, screen: str):
    """Execute a scripted step walk headlessly and write the journal."""
    base = Path(project_path).parent
    try:
        project = load_project(project_path)
        walk = json.loads(Path(script_path).read_text(encoding="utf-8"))
        width, height = (int(v) for v in screen.split("x"))
        inputs = load_input_artifacts(project, project_path)
        host = SubprocessToolHost(list(project.graph.tools), base_dir=base)
        engine = ExecutionEngine(
            project.workflow, project.graph, host, screen=(width, height)
        )
        engine.start_session(inputs)
        compositions: dict[str, SummaryComposition] = {}
        try:
            for action in walk.get("actions", []):
                _apply_walk_action(engine, action, compositions)
        finally:
            host.shutdown()
        session = engine.session
        assert session is not None
        out = Path(journal_path) if journal_path else base / "sessions" / "walk.jsonl"
        out.parent.mkdir(parents=True, exist_ok=True)
        write_journal(out, session.journal)
        _dump_capture_artifacts(session, out)
        _dump_compositions(compositions, base, out)
        click.echo(f"journal written to {out} ({len(session.journal)} activations)")
    except ChainweaveError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    sys.exit(EXIT_OK)


def _dump_capture_artifacts(session: Session, journal_path: Path) -> None:
    """Persist capture images next to the journal for later composition."""
    artifacts_dir = journal_path.with_suffix(journal_path.suffix + ".artifacts")
    referenced = {
        c.image_ref for record in session.journal for c in record.captures
    }
    for artifact_id in sorted(referenced):
        artifact = session.data_store.get(artifact_id)
        if artifact is not None:
            write_artifact(artifacts_dir, artifact)


def _dump_compositions(compositions: dict, base: Path, journal_path: Path) -> None:
    if not compositions:
        return
    comp_dir = base / "compositions"
    comp_dir.mkdir(parents=True, exist_ok=True)
    for comp_id, composition in compositions.items():
        obj = {
            "id": composition.id,
            "title": composition.title,
            "canvas": list(composition.canvas),
            "placements": [
                {
                    "capture": p.capture_id,
                    "region": [p.region.x, p.region.y, p.region.width, p.region.height],
                    "z": p.z_order,
                }
                for p in composition.placements
            ],
            "session": str(journal_path.relative_to(base))
            if journal_path.is_relative_to(base)
            else str(journal_path),
        }
        (comp_dir / f"{comp_id}.json").write_text(canonical_json(obj), encoding="utf-8")


@main.command()
@click.argument("project_path", type=click.Path(exists=True))
@click.argument("journal_path", type=click.Path(exists=True))
def replay(project_path: str, journal_path: str):
    """Re-execute a recorded journal and verify the transfer log matches."""
    base = Path(project_path).parent
    try:
        project = load_project(project_path)
        recorded = read_journal(journal_path)
        inputs = load_input_artifacts(project, project_path)
        host = SubprocessToolHost(list(project.graph.tools), base_dir=base)
        replay_journal(project.workflow, project.graph, inputs, recorded, host)
    except ReplayDivergence as exc:
        click.echo(f"divergence: {exc}", err=True)
        sys.exit(EXIT_DIVERGENCE)
    except ChainweaveError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo("replay ok: transfer log identical")
    sys.exit(EXIT_OK)


@main.command("export-summary")
@click.argument("project_path", type=click.Path(exists=True))
@click.argument("composition_id")
@click.option("--out-dir", default=None, type=click.Path(), help="Output directory.")
def export_summary(project_path: str, composition_id: str, out_dir: str | None):
    """Render a saved composition to <id>.png plus <id>.manifest.json."""
    base = Path(project_path).parent
    try:
        comp_path = base / "compositions" / f"{composition_id}.json"
        if not comp_path.exists():
            raise ChainweaveError(f"no composition {composition_id!r} in {comp_path.parent}")
        raw = json.loads(comp_path.read_text(encoding="utf-8"))
        journal_path = base / raw["session"]
        journal = read_journal(journal_path)
        session = Session(journal=journal)
        artifacts_dir = journal_path.with_suffix(journal_path.suffix + ".artifacts")
        for record in journal:
            for capture in record.captures:
                if capture.image_ref not in session.data_store:
                    session.data_store[capture.image_ref] = read_artifact(
                        artifacts_dir, capture.image_ref
                    )
        composition = SummaryComposition(
            id=str(raw["id"]),
            canvas=(int(raw["canvas"][0]), int(raw["canvas"][1])),
            title=str(raw.get("title", "")),
        )
        for p in raw.get("placements", []):
            x, y, w, h = (float(v) for v in p["region"])
            place_capture(composition, session, str(p["capture"]), Region(x, y, w, h))
        blob, manifest = export_composite(composition, session)
        target = Path(out_dir) if out_dir else comp_path.parent
        target.mkdir(parents=True, exist_ok=True)
        (target / f"{composition_id}.png").write_bytes(blob.data)
        (target / f"{composition_id}.manifest.json").write_text(
            canonical_json(manifest), encoding="utf-8"
        )
        click.echo(f"exported {target / f'{composition_id}.png'}")
    except ChainweaveError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    sys.exit(EXIT_OK)


@main.command()
@click.argument("project_path", type=click.Path(exists=True))
@click.option("--host", "bind_host", default="127.0.0.1")
@click.option("--port", default=8343, type=int)
def serve(project_path: str, bind_host: str, port: int):
    """Serve the UI-facing API for a project."""
    import uvicorn

    from .service import OrchestratorService, build_app

    try:
        project = load_project(project_path)
    except ChainweaveError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    service = OrchestratorService(project, project_path=project_path)
    app = build_app(service)
    try:
        uvicorn.run(app, host=bind_host, port=port, log_level="warning")
    except SystemExit:
        raise
    except OSError as exc:
        click.echo(f"bind failure: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


@main.group()
def tool():
    """Tool diagnostics."""


@tool.command()
@click.argument("tool_id")
@click.option("--project", "project_path", default="project.json", type=click.Path(exists=True))
def ping(tool_id: str, project_path: str):
    """Launch a tool, run the activation handshake, and stop it again."""
    base = Path(project_path).parent
    try:
        project = _load(project_path)
        host = SubprocessToolHost(list(project.graph.tools), base_dir=base)
        host.activate(tool_id)
        host.deactivate(tool_id)
        click.echo(f"{tool_id}: handshake ok")
    except ChainweaveError as exc:
        click.echo(f"{tool_id}: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
