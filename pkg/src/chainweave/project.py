"""Project persistence: one JSON document tying workflow, graph, and layouts
together, plus the on-disk artifact store for workflow inputs.

Serialization is canonical (sorted keys, two-space indent, trailing
newline) so that saving twice yields byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .data import (
    BlobData,
    DataArtifact,
    TabularData,
    artifact_from_obj,
    artifact_to_obj,
)
from .errors import DocumentSyntaxError, DocumentValidationError, IOFailure
from .graph import CoordinationGraph, graph_from_obj, graph_to_obj, validate_graph
from .workflow import WorkflowSpec, validate_workflow, workflow_from_obj, workflow_to_obj


@dataclass(frozen=True)
class Project:
    id: str
    workflow: WorkflowSpec
    graph: CoordinationGraph
    artifacts_dir: str = "artifacts"
    session_refs: tuple[str, ...] = ()


def canonical_json(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def project_to_obj(project: Project) -> dict:
    return {
        "id": project.id,
        "workflow": workflow_to_obj(project.workflow),
        "graph": graph_to_obj(project.graph),
        "artifactsDir": project.artifacts_dir,
        "sessions": list(project.session_refs),
    }


def project_from_obj(raw: object) -> Project:
    if not isinstance(raw, dict):
        raise DocumentSyntaxError("project document must be a JSON object")
    try:
        return Project(
            id=str(raw["id"]),
            workflow=workflow_from_obj(raw["workflow"]),
            graph=graph_from_obj(raw["graph"]),
            artifacts_dir=str(raw.get("artifactsDir", "artifacts")),
            session_refs=tuple(str(s) for s in raw.get("sessions", [])),
        )
    except KeyError as exc:
        raise DocumentSyntaxError(f"project missing key {exc.args[0]!r}") from exc


def load_project(path: str | Path, validate: bool = True) -> Project:
    """Read and parse a project file; optionally check all invariants."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read project {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentSyntaxError(f"project {path} is not valid JSON: {exc}") from exc
    project = project_from_obj(raw)
    if validate:
        report = validate_workflow(project.workflow)
        report.findings.extend(validate_graph(project.workflow, project.graph).findings)
        if not report.ok:
            raise DocumentValidationError(
                f"project {path} has validation findings", report
            )
    return project


def save_project(project: Project, path: str | Path) -> None:
    path = Path(path)
    try:
        path.write_text(canonical_json(project_to_obj(project)), encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot write project {path}: {exc}") from exc


# --- artifact store ---------------------------------------------------------------

def write_artifact(directory: str | Path, artifact: DataArtifact) -> Path:
    """Persist one artifact: <id>.json for tables, <id>.bin plus sidecar for blobs."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if isinstance(artifact.payload, TabularData):
        path = directory / f"{artifact.id}.json"
        path.write_text(canonical_json(artifact_to_obj(artifact)), encoding="utf-8")
        return path
    path = directory / f"{artifact.id}.bin"
    path.write_bytes(artifact.payload.data)
    meta = {
        "id": artifact.id,
        "mediaType": artifact.payload.media_type,
        "origin": {"tool": artifact.origin_tool},
    }
    (directory / f"{artifact.id}.bin.meta.json").write_text(
        canonical_json(meta), encoding="utf-8"
    )
    return path


def read_artifact(directory: str | Path, artifact_id: str) -> DataArtifact:
    directory = Path(directory)
    table_path = directory / f"{artifact_id}.json"
    if table_path.exists():
        try:
            return artifact_from_obj(json.loads(table_path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise DocumentSyntaxError(f"artifact {artifact_id!r} is not valid JSON: {exc}") from exc
    blob_path = directory / f"{artifact_id}.bin"
    meta_path = directory / f"{artifact_id}.bin.meta.json"
    if blob_path.exists() and meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DocumentSyntaxError(f"artifact {artifact_id!r} sidecar is malformed: {exc}") from exc
        origin = meta.get("origin") or {}
        return DataArtifact(
            id=artifact_id,
            payload=BlobData(media_type=str(meta["mediaType"]), data=blob_path.read_bytes()),
            origin_tool=str(origin.get("tool", "external")),
        )
    raise IOFailure(f"no artifact {artifact_id!r} in {directory}")


def load_input_artifacts(project: Project, project_path: str | Path) -> dict[str, DataArtifact]:
    """Load every designated workflow input from the project's artifact store."""
    base = Path(project_path).parent / project.artifacts_dir
    inputs: dict[str, DataArtifact] = {}
    for artifact_id in project.graph.data_source_ids():
        inputs[artifact_id] = read_artifact(base, artifact_id)
    return inputs
