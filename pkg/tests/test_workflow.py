"""Workflow model: parsing, validation, and neighborhood queries."""

from __future__ import annotations

import json
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainweave.errors import DocumentSyntaxError, DocumentValidationError, UnknownStep
from chainweave.workflow import (
    STAGE_COLORS,
    Stage,
    WorkflowSpec,
    WorkflowStep,
    parse_workflow,
    predecessors,
    successors,
    validate_workflow,
    workflow_from_obj,
    workflow_to_obj,
)


def nine_step_doc() -> dict:
    """The study-evaluation shape: 5 preparation, 3 analysis, 1 summarization,
    linear chain plus two analysis back-edges (10 transitions)."""
    stages = ["preparation"] * 5 + ["analysis"] * 3 + ["summarization"]
    steps = [
        {"id": f"s{i+1}", "name": f"Step {i+1}", "stage": stage, "description": f"do part {i+1}"}
        for i, stage in enumerate(stages)
    ]
    transitions = [[f"s{i}", f"s{i+1}"] for i in range(1, 9)]
    transitions += [["s7", "s6"], ["s8", "s7"]]
    return {"steps": steps, "transitions": transitions, "start": ["s1"]}


def test_parse_nine_step_document():
    spec = parse_workflow(json.dumps(nine_step_doc()))
    assert len(spec.steps) == 9
    assert len(spec.transitions) == 10
    stages = [s.stage for s in spec.steps]
    assert stages.count(Stage.PREPARATION) == 5
    assert stages.count(Stage.ANALYSIS) == 3
    assert stages.count(Stage.SUMMARIZATION) == 1


def test_parse_empty_workflow_rejected():
    doc = {"steps": [], "transitions": [], "start": []}
    with pytest.raises(DocumentValidationError) as exc_info:
        parse_workflow(json.dumps(doc))
    assert "empty workflow" in str(exc_info.value)


def test_parse_dangling_transition_lists_offender():
    doc = nine_step_doc()
    doc["transitions"].append(["s2", "s99"])
    with pytest.raises(DocumentValidationError) as exc_info:
        parse_workflow(json.dumps(doc))
    assert "s99" in exc_info.value.report.subjects("UNKNOWN_TRANSITION_ENDPOINT")


def test_parse_malformed_json():
    with pytest.raises(DocumentSyntaxError):
        parse_workflow("{not json")


def test_parse_missing_key():
    with pytest.raises(DocumentSyntaxError):
        parse_workflow(json.dumps({"steps": []}))


def test_stage_colors_distinct():
    assert len(STAGE_COLORS) == 3
    assert len(set(STAGE_COLORS.values())) == 3


def test_validate_nine_step_spec_clean():
    spec = parse_workflow(json.dumps(nine_step_doc()))
    assert validate_workflow(spec).ok


def _spec(steps, transitions, start):
    return WorkflowSpec(
        steps=tuple(WorkflowStep(id=s, name=s, stage=Stage.PREPARATION) for s in steps),
        transitions=tuple(transitions),
        start_step_ids=tuple(start),
    )


def test_validate_unreachable_step():
    spec = _spec(["s1", "s2", "s5"], [("s1", "s2")], ["s1"])
    report = validate_workflow(spec)
    assert report.subjects("UNREACHABLE") == ["s5"]


def test_validate_duplicate_id():
    spec = _spec(["s1", "s1"], [], ["s1"])
    report = validate_workflow(spec)
    assert "s1" in report.subjects("DUPLICATE_ID")


def test_successors_chain():
    spec = _spec(["s1", "s2", "s3"], [("s1", "s2"), ("s2", "s3")], ["s1"])
    assert [s.id for s in successors(spec, "s2")] == ["s3"]


def test_successors_back_edge_in_declaration_order():
    spec = _spec(
        ["s6", "s7", "s8"],
        [("s6", "s7"), ("s7", "s6"), ("s7", "s8")],
        ["s6"],
    )
    assert [s.id for s in successors(spec, "s7")] == ["s6", "s8"]


def test_successors_terminal_step_empty():
    spec = _spec(["s1", "s2"], [("s1", "s2")], ["s1"])
    assert successors(spec, "s2") == []


def test_successors_unknown_step():
    spec = _spec(["s1"], [], ["s1"])
    with pytest.raises(UnknownStep):
        successors(spec, "nope")


def test_roundtrip_serialization():
    spec = parse_workflow(json.dumps(nine_step_doc()))
    again = workflow_from_obj(workflow_to_obj(spec))
    assert again == spec


# --- properties -----------------------------------------------------------------

@st.composite
def random_specs(draw) -> WorkflowSpec:
    n = draw(st.integers(min_value=1, max_value=8))
    ids = [f"s{i}" for i in range(n)]
    edges = draw(
        st.lists(
            st.tuples(st.sampled_from(ids), st.sampled_from(ids)),
            max_size=20,
            unique=True,
        )
    )
    start = draw(st.lists(st.sampled_from(ids), min_size=1, max_size=n, unique=True))
    return _spec(ids, edges, start)


@settings(max_examples=120, deadline=None)
@given(random_specs())
def test_successors_predecessors_mutually_consistent(spec: WorkflowSpec):
    for s in spec.steps:
        for t in successors(spec, s.id):
            assert s.id in {p.id for p in predecessors(spec, t.id)}
        for p in predecessors(spec, s.id):
            assert s.id in {t.id for t in successors(spec, p.id)}


def _bfs_reachable(spec: WorkflowSpec) -> set[str]:
    # Independent oracle: plain BFS over the raw transition list.
    frontier = deque(spec.start_step_ids)
    seen = set(spec.start_step_ids)
    while frontier:
        cur = frontier.popleft()
        for frm, to in spec.transitions:
            if frm == cur and to not in seen:
                seen.add(to)
                frontier.append(to)
    return seen


@settings(max_examples=120, deadline=None)
@given(random_specs())
def test_unreachable_findings_match_bfs_oracle(spec: WorkflowSpec):
    report = validate_workflow(spec)
    flagged = set(report.subjects("UNREACHABLE"))
    expected = {s.id for s in spec.steps} - _bfs_reachable(spec)
    assert flagged == expected
