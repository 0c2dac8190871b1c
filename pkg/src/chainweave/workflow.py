"""Workflow flowchart model: stages, steps, and allowed transitions.

The workflow document is a JSON object with keys ``steps``, ``transitions``
and ``start``; see :func:`parse_workflow`.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .errors import DocumentSyntaxError, DocumentValidationError, UnknownStep, ValidationReport


class Stage(Enum):
    """The three common stages every step belongs to."""

    PREPARATION = "preparation"
    ANALYSIS = "analysis"
    SUMMARIZATION = "summarization"


#: One display color token per stage, used by overview renderers.
STAGE_COLORS: dict[Stage, str] = {
    Stage.PREPARATION: "#4c9fd6",
    Stage.ANALYSIS: "#d6874c",
    Stage.SUMMARIZATION: "#6fbf6f",
}


@dataclass(frozen=True, slots=True)
class WorkflowStep:
    """One step of the flowchart, shown as a colored rectangle."""

    id: str
    name: str
    stage: Stage
    description: str = ""
    expected_toolset_id: str | None = None


@dataclass(frozen=True)
class WorkflowSpec:
    """Directed flowchart of steps the user walks through at runtime."""

    steps: tuple[WorkflowStep, ...]
    transitions: tuple[tuple[str, str], ...]
    start_step_ids: tuple[str, ...]

    def step(self, step_id: str) -> WorkflowStep:
        for s in self.steps:
            if s.id == step_id:
                return s
        raise UnknownStep(f"unknown step {step_id!r}", subject=step_id)

    def has_step(self, step_id: str) -> bool:
        return any(s.id == step_id for s in self.steps)

    def has_transition(self, from_id: str, to_id: str) -> bool:
        return (from_id, to_id) in set(self.transitions)

    def step_ids(self) -> list[str]:
        return [s.id for s in self.steps]


def parse_workflow(document: str) -> WorkflowSpec:
    """Parse a workflow JSON document and validate all invariants.

    Raises DocumentSyntaxError for malformed JSON or missing/ill-typed keys
    and DocumentValidationError (with the offending ids) when the parsed
    spec violates an invariant.
    """
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise DocumentSyntaxError(f"not valid JSON: {exc}") from exc
    spec = workflow_from_obj(raw)
    report = validate_workflow(spec)
    if not report.ok:
        raise DocumentValidationError(
            "; ".join(f.message or f"{f.code}: {f.subject}" for f in report.findings),
            report,
        )
    return spec


def workflow_from_obj(raw: object) -> WorkflowSpec:
    """Build a WorkflowSpec from decoded JSON without validating invariants."""
    if not isinstance(raw, dict):
        raise DocumentSyntaxError("workflow document must be a JSON object")
    try:
        steps_raw = raw["steps"]
        transitions_raw = raw["transitions"]
        start_raw = raw["start"]
    except KeyError as exc:
        raise DocumentSyntaxError(f"missing top-level key {exc.args[0]!r}") from exc
    if not isinstance(steps_raw, list) or not isinstance(transitions_raw, list) \
            or not isinstance(start_raw, list):
        raise DocumentSyntaxError("'steps', 'transitions' and 'start' must be arrays")

    steps: list[WorkflowStep] = []
    for i, s in enumerate(steps_raw):
        if not isinstance(s, dict):
            raise DocumentSyntaxError(f"step #{i} is not an object")
        try:
            stage = Stage(s["stage"])
        except (KeyError, ValueError) as exc:
            raise DocumentSyntaxError(f"step #{i} has no valid 'stage'") from exc
        try:
            step = WorkflowStep(
                id=str(s["id"]),
                name=str(s["name"]),
                stage=stage,
                description=str(s["description"]),
                expected_toolset_id=s.get("expectedToolset"),
            )
        except KeyError as exc:
            raise DocumentSyntaxError(f"step #{i} missing key {exc.args[0]!r}") from exc
        steps.append(step)

    transitions: list[tuple[str, str]] = []
    for i, t in enumerate(transitions_raw):
        if not isinstance(t, list) or len(t) != 2:
            raise DocumentSyntaxError(f"transition #{i} must be a [from, to] pair")
        transitions.append((str(t[0]), str(t[1])))

    return WorkflowSpec(
        steps=tuple(steps),
        transitions=tuple(transitions),
        start_step_ids=tuple(str(x) for x in start_raw),
    )


def workflow_to_obj(spec: WorkflowSpec) -> dict:
    """Serialize a WorkflowSpec back to its document form."""
    steps = []
    for s in spec.steps:
        obj: dict = {
            "id": s.id,
            "name": s.name,
            "stage": s.stage.value,
            "description": s.description,
        }
        if s.expected_toolset_id is not None:
            obj["expectedToolset"] = s.expected_toolset_id
        steps.append(obj)
    return {
        "steps": steps,
        "transitions": [[a, b] for a, b in spec.transitions],
        "start": list(spec.start_step_ids),
    }


def validate_workflow(spec: WorkflowSpec) -> ValidationReport:
    """Check all WorkflowSpec invariants; findings are data, not failures."""
    report = ValidationReport()
    if not spec.steps:
        report.add("EMPTY_WORKFLOW", "", "empty workflow")
        return report

    seen: set[str] = set()
    for s in spec.steps:
        if not s.id:
            report.add("EMPTY_ID", s.name or "<unnamed>", "step id must be non-empty")
        elif s.id in seen:
            report.add("DUPLICATE_ID", s.id, f"step id {s.id!r} declared twice")
        seen.add(s.id)

    known = {s.id for s in spec.steps}
    for frm, to in spec.transitions:
        for endpoint in (frm, to):
            if endpoint not in known:
                report.add(
                    "UNKNOWN_TRANSITION_ENDPOINT",
                    endpoint,
                    f"transition {frm!r} -> {to!r} references unknown step {endpoint!r}",
                )

    if not spec.start_step_ids:
        report.add("NO_START", "", "at least one start step is required")
    for sid in spec.start_step_ids:
        if sid not in known:
            report.add("UNKNOWN_START", sid, f"start step {sid!r} is not defined")

    # Breadth-first reachability from the start set.
    reachable: set[str] = set()
    queue = deque(sid for sid in spec.start_step_ids if sid in known)
    reachable.update(queue)
    adjacency: dict[str, list[str]] = {}
    for frm, to in spec.transitions:
        adjacency.setdefault(frm, []).append(to)
    while queue:
        current = queue.popleft()
        for nxt in adjacency.get(current, []):
            if nxt in known and nxt not in reachable:
                reachable.add(nxt)
                queue.append(nxt)
    for s in spec.steps:
        if s.id not in reachable:
            report.add("UNREACHABLE", s.id, f"step {s.id!r} unreachable from start steps")

    return report


def successors(spec: WorkflowSpec, step_id: str) -> list[WorkflowStep]:
    """All steps reachable in one transition from step_id, in declaration order."""
    if not spec.has_step(step_id):
        raise UnknownStep(f"unknown step {step_id!r}", subject=step_id)
    targets = {to for frm, to in spec.transitions if frm == step_id}
    return [s for s in spec.steps if s.id in targets]


def predecessors(spec: WorkflowSpec, step_id: str) -> list[WorkflowStep]:
    """All steps with a transition into step_id, in declaration order."""
    if not spec.has_step(step_id):
        raise UnknownStep(f"unknown step {step_id!r}", subject=step_id)
    sources = {frm for frm, to in spec.transitions if to == step_id}
    return [s for s in spec.steps if s.id in sources]
