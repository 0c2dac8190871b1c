"""Execution engine: activation diffs, step entry, documentation, replay."""

from __future__ import annotations

import itertools
import random

import pytest

from chainweave.data import (
    BlobData,
    DataArtifact,
    FilterRows,
    TransformPipeline,
)
from chainweave.engine import ExecutionEngine, compute_activation_diff, replay
from chainweave.errors import (
    ActivationFailure,
    IllegalTransition,
    InvalidGraph,
    MissingDataSource,
    NoActiveStep,
    ReplayDivergence,
    UnknownCapture,
    UnknownSeq,
)
from chainweave.graph import (
    CoordinationGraph,
    CoordinationLink,
    DataFlowSpec,
    DataSourceBinding,
    LinkKind,
    StepBinding,
    Toolset,
)
from chainweave.host import ACTIVE
from chainweave.journal import StepStatus
from chainweave.workflow import Stage, WorkflowSpec, WorkflowStep

from conftest import FixedClock, InProcessHost, cohort_artifact, make_tool, solid_png


def small_spec() -> WorkflowSpec:
    steps = (
        WorkflowStep(id="s1", name="collect", stage=Stage.PREPARATION),
        WorkflowStep(id="s2", name="explore", stage=Stage.ANALYSIS),
        WorkflowStep(id="s3", name="summarize", stage=Stage.SUMMARIZATION),
    )
    transitions = (("s1", "s2"), ("s2", "s1"), ("s2", "s3"))
    return WorkflowSpec(steps=steps, transitions=transitions, start_step_ids=("s1",))


def small_graph() -> CoordinationGraph:
    """s1 -> {t1}, s2 -> {t1, t2}, s3 -> {t3}; data flows t1->t2 and t1->t3."""
    tools = tuple(make_tool(t) for t in ("t1", "t2", "t3"))
    toolsets = (
        Toolset(id="A", member_tool_ids=frozenset({"t1"})),
        Toolset(id="B", member_tool_ids=frozenset({"t1", "t2"})),
        Toolset(id="C", member_tool_ids=frozenset({"t3"})),
    )
    pipelines = (
        TransformPipeline(id="identity"),
        TransformPipeline(id="patients", steps=(FilterRows("group", "=", "patient"),)),
    )
    links = (
        CoordinationLink(
            id="l1",
            source_tool_id="t1",
            target_tool_id="t2",
            kind=LinkKind.DATA_FLOW,
            data=DataFlowSpec("out", "in", "patients"),
        ),
        CoordinationLink(
            id="l2",
            source_tool_id="t1",
            target_tool_id="t3",
            kind=LinkKind.DATA_FLOW,
            data=DataFlowSpec("out", "in", "identity"),
        ),
        CoordinationLink(
            id="l3", source_tool_id="t2", target_tool_id="t3", kind=LinkKind.ACTIVATION_ONLY
        ),
        CoordinationLink(
            id="l4", source_tool_id="t2", target_tool_id="t1", kind=LinkKind.ACTIVATION_ONLY
        ),
    )
    bindings = (
        StepBinding(step_id="s1", toolset_id="A"),
        StepBinding(step_id="s2", toolset_id="B"),
        StepBinding(step_id="s3", toolset_id="C"),
    )
    return CoordinationGraph(
        tools=tools,
        toolsets=toolsets,
        links=links,
        bindings=bindings,
        data_sources=(DataSourceBinding(artifact_id="cohort", tool_id="t1", channel="in"),),
        pipelines=pipelines,
    )


def make_engine(clock=None, host=None):
    spec, graph = small_spec(), small_graph()
    host = host or InProcessHost(["t1", "t2", "t3"])
    host.echo[("t1", "out")] = "in"
    engine = ExecutionEngine(spec, graph, host, clock=clock or FixedClock())
    return engine, host


# --- compute_activation_diff ---------------------------------------------------------

def test_diff_empty_previous():
    assert compute_activation_diff(set(), {"A"}) == ({"A"}, frozenset(), frozenset())


def test_diff_arriving_tool():
    activate, keep, deactivate = compute_activation_diff({"A"}, {"A", "B"})
    assert (activate, keep, deactivate) == ({"B"}, {"A"}, frozenset())


def test_diff_full_switch():
    activate, keep, deactivate = compute_activation_diff({"A", "B"}, {"C"})
    assert (activate, keep, deactivate) == ({"C"}, frozenset(), {"A", "B"})


def test_diff_exhaustive_three_tool_universe():
    universe = ["x", "y", "z"]
    subsets = [
        frozenset(c) for r in range(4) for c in itertools.combinations(universe, r)
    ]
    for prev in subsets:
        for nxt in subsets:
            activate, keep, deactivate = compute_activation_diff(prev, nxt)
            # enumeration oracle: check each tool's classification directly
            for tool in universe:
                assert (tool in activate) == (tool in nxt and tool not in prev)
                assert (tool in keep) == (tool in nxt and tool in prev)
                assert (tool in deactivate) == (tool in prev and tool not in nxt)
            assert activate | keep == frozenset(nxt)
            assert (activate | keep) & deactivate == frozenset()


# --- start_session -------------------------------------------------------------------

def test_start_session_seeds_store():
    engine, _ = make_engine()
    session = engine.start_session({"cohort": cohort_artifact()})
    assert session.journal == []
    assert session.current_seq is None
    assert "cohort" in session.data_store


def test_start_session_invalid_graph():
    spec = small_spec()
    graph = CoordinationGraph()  # nothing bound
    engine = ExecutionEngine(spec, graph, InProcessHost([]))
    with pytest.raises(InvalidGraph):
        engine.start_session({})


def test_start_session_missing_data_source():
    engine, _ = make_engine()
    with pytest.raises(MissingDataSource) as exc_info:
        engine.start_session({})
    assert exc_info.value.missing == ["cohort"]


# --- enter_step ------------------------------------------------------------------------

def test_first_entry_activates_and_feeds_inputs():
    engine, host = make_engine()
    engine.start_session({"cohort": cohort_artifact()})
    record = engine.enter_step("s1")
    assert record.seq == 1
    assert record.status is StepStatus.PENDING
    assert host.active_tool_ids() == {"t1"}
    # the designated input was loaded into t1's channel
    assert [(t, c) for t, c, _ in host.loads] == [("t1", "in")]
    # s1's toolset has no inbound data-flow links, so no transfers
    assert record.transfers == []
    assert host.geometries[-1] == ("t1", (0, 0, 1920, 1080))


def test_enter_step_runs_transfers_into_arriving_tool():
    engine, host = make_engine()
    engine.start_session({"cohort": cohort_artifact()})
    engine.enter_step("s1")
    record = engine.enter_step("s2")
    assert host.active_tool_ids() == {"t1", "t2"}
    assert [t.link_id for t in record.transfers] == ["l1"]
    delivered = [a for t, c, a in host.loads if t == "t2" and c == "in"]
    assert len(delivered) == 1
    assert len(delivered[0].payload.rows) == 33  # patients only


def test_enter_step_handoff_from_departing_tool():
    engine, host = make_engine()
    engine.start_session({"cohort": cohort_artifact()})
    engine.enter_step("s1")
    engine.enter_step("s2")
    record = engine.enter_step("s3")
    assert host.active_tool_ids() == {"t3"}
    # l2 pulled from t1 while it was still active, then t1/t2 were retired
    assert [t.link_id for t in record.transfers] == ["l2"]
    delivered = [a for t, c, a in host.loads if t == "t3"]
    assert len(delivered[0].payload.rows) == 73


def test_enter_step_illegal_transition():
    engine, _ = make_engine()
    engine.start_session({"cohort": cohort_artifact()})
    engine.enter_step("s1")
    with pytest.raises(IllegalTransition):
        engine.enter_step("s3")


def test_enter_step_not_a_start_step():
    engine, _ = make_engine()
    engine.start_session({"cohort": cohort_artifact()})
    with pytest.raises(IllegalTransition):
        engine.enter_step("s2")


def test_revisit_creates_fresh_record():
    engine, _ = make_engine()
    engine.start_session({"cohort": cohort_artifact()})
    engine.enter_step("s1")
    engine.enter_step("s2")
    engine.add_note("first visit of s2")
    engine.enter_step("s1")
    record = engine.enter_step("s2")
    assert record.seq == 4
    session = engine.session
    s2_records = [r for r in session.journal if r.step_id == "s2"]
    assert [r.seq for r in s2_records] == [2, 4]
    assert len(s2_records[0].notes) == 1
    assert s2_records[1].notes == []  # fresh notes per activation


def test_activation_failure_rolls_back_and_cancels():
    host = InProcessHost(["t1", "t2", "t3"])
    host.fail_activate.add("t2")
    engine, host = make_engine(host=host)
    engine.start_session({"cohort": cohort_artifact()})
    engine.enter_step("s1")
    with pytest.raises(ActivationFailure):
        engine.enter_step("s2")
    assert host.active_tool_ids() == {"t1"}  # previous set restored
    session = engine.session
    assert len(session.journal) == 2
    assert session.journal[-1].status is StepStatus.CANCELED
    # navigation continues from the step whose tools are actually active
    assert session.current_record().step_id == "s1"


def test_skipped_transfer_when_source_unavailable():
    host = InProcessHost(["t1", "t2", "t3"])
    engine, host = make_engine(host=host)  # no echo configured: export fails
    host.echo.clear()
    engine.start_session({"cohort": cohort_artifact()})
    engine.enter_step("s1")
    record = engine.enter_step("s2")
    assert record.transfers == []
    assert any(f.code == "SKIPPED_TRANSFER" and f.subject == "l1" for f in engine.findings)


def test_active_set_equals_bound_toolset_after_each_step():
    engine, host = make_engine()
    engine.start_session({"cohort": cohort_artifact()})
    for step, expected in [("s1", {"t1"}), ("s2", {"t1", "t2"}), ("s3", {"t3"})]:
        engine.enter_step(step)
        assert host.active_tool_ids() == expected


# --- status, notes, captures -------------------------------------------------------------

def test_status_transitions_recorded():
    engine, _ = make_engine()
    engine.start_session({"cohort": cohort_artifact()})
    record = engine.enter_step("s1")
    engine.set_status(record.seq, StepStatus.PAUSED)
    engine.set_status(record.seq, StepStatus.DONE)
    assert record.status is StepStatus.DONE
    assert [s.value for _, s in record.status_history] == ["paused", "done"]


def test_set_status_unknown_seq():
    engine, _ = make_engine()
    engine.start_session({"cohort": cohort_artifact()})
    with pytest.raises(UnknownSeq):
        engine.set_status(9, StepStatus.DONE)


def test_add_note_appends():
    engine, _ = make_engine()
    engine.start_session({"cohort": cohort_artifact()})
    record = engine.enter_step("s1")
    engine.add_note("outlier in control group")
    assert [n.text for n in record.notes] == ["outlier in control group"]


def test_add_note_without_active_step():
    engine, _ = make_engine()
    engine.start_session({"cohort": cohort_artifact()})
    with pytest.raises(NoActiveStep):
        engine.add_note("too early")


def test_capture_snapshot_and_update_chain():
    engine, host = make_engine()
    host.snapshots["t1"] = BlobData("image/png", solid_png((9, 9, 9)))
    engine.start_session({"cohort": cohort_artifact()})
    record = engine.enter_step("s1")
    first = engine.add_capture("thickness map", tool_id="t1")
    assert first.source_tool_id == "t1"
    stored = engine.session.data_store[first.image_ref]
    assert stored.payload.data == solid_png((9, 9, 9))

    host.snapshots["t1"] = BlobData("image/png", solid_png((8, 8, 8)))
    second = engine.update_capture(first.id)
    assert first.superseded_by == second.id
    assert second.live and not first.live
    assert len(record.captures) == 2
    # exactly one live head in the chain
    live = [c for c in record.captures if c.live]
    assert live == [second]

    with pytest.raises(UnknownCapture):
        engine.update_capture(first.id)  # dead predecessor cannot be updated


def test_capture_supplied_image_and_remove():
    engine, _ = make_engine()
    engine.start_session({"cohort": cohort_artifact()})
    engine.enter_step("s1")
    capture = engine.add_capture("external", image=BlobData("image/png", solid_png((1, 1, 1))))
    engine.remove_capture(capture.id)
    assert capture.removed
    with pytest.raises(UnknownCapture):
        engine.remove_capture("ghost")


# --- journal-length property over random legal walks ---------------------------------------

def _random_walk_engine(rng: random.Random):
    n = rng.randint(2, 6)
    step_ids = [f"s{i}" for i in range(n)]
    steps = tuple(WorkflowStep(id=s, name=s, stage=Stage.ANALYSIS) for s in step_ids)
    # chain edges keep every step reachable; extras add back-and-forth
    transitions = [(step_ids[i], step_ids[i + 1]) for i in range(n - 1)]
    for a in step_ids:
        for b in step_ids:
            if a != b and (a, b) not in transitions and rng.random() < 0.3:
                transitions.append((a, b))
    spec = WorkflowSpec(steps=steps, transitions=tuple(transitions), start_step_ids=(step_ids[0],))
    universe = [f"t{i}" for i in range(4)]
    toolsets = tuple(
        Toolset(id=f"ts{i}", member_tool_ids=frozenset(rng.sample(universe, rng.randint(1, 3))))
        for i in range(n)
    )
    bindings = tuple(StepBinding(step_id=s, toolset_id=f"ts{i}") for i, s in enumerate(step_ids))
    graph = CoordinationGraph(
        tools=tuple(make_tool(t) for t in universe),
        toolsets=toolsets,
        bindings=bindings,
    )
    # links between every required pair keep the graph valid
    from chainweave.graph import add_link, derive_required_links

    for i, (a, b) in enumerate(sorted(derive_required_links(spec, graph))):
        graph = add_link(
            graph,
            CoordinationLink(id=f"l{i}", source_tool_id=a, target_tool_id=b, kind=LinkKind.ACTIVATION_ONLY),
        )
    host = InProcessHost(universe)
    return spec, ExecutionEngine(spec, graph, host, clock=FixedClock()), host


def test_journal_length_matches_entry_count_over_random_walks():
    rng = random.Random(99)
    for _ in range(40):
        spec, engine, host = _random_walk_engine(rng)
        engine.start_session({})
        entries = 0
        current = None
        for _ in range(rng.randint(1, 12)):
            if current is None:
                nxt = spec.start_step_ids[0]
            else:
                options = [b for a, b in spec.transitions if a == current]
                if not options:
                    break
                nxt = rng.choice(options)
            engine.enter_step(nxt)
            entries += 1
            current = nxt
        assert len(engine.session.journal) == entries
        seqs = [r.seq for r in engine.session.journal]
        assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)


# --- replay -----------------------------------------------------------------------------

def _run_scenario_journal(perturb=False):
    engine, host = make_engine()
    inputs = {"cohort": cohort_artifact()}
    engine.start_session(inputs)
    for step in ("s1", "s2", "s1", "s2", "s3"):
        engine.enter_step(step)
    return engine.session.journal


def test_replay_reproduces_transfer_log():
    recorded = _run_scenario_journal()
    host = InProcessHost(["t1", "t2", "t3"])
    host.echo[("t1", "out")] = "in"
    replayed = replay(
        small_spec(), small_graph(), {"cohort": cohort_artifact()}, recorded, host,
        clock=FixedClock(),
    )
    from chainweave.journal import transfer_log

    assert transfer_log(replayed) == transfer_log(recorded)


def test_replay_detects_perturbed_input():
    recorded = _run_scenario_journal()
    host = InProcessHost(["t1", "t2", "t3"])
    host.echo[("t1", "out")] = "in"
    cohort = cohort_artifact()
    from dataclasses import replace as dc_replace

    from chainweave.data import TabularData

    perturbed = dc_replace(
        cohort,
        payload=TabularData(columns=cohort.payload.columns, rows=cohort.payload.rows[:-1]),
    )
    with pytest.raises(ReplayDivergence) as exc_info:
        replay(
            small_spec(), small_graph(), {"cohort": perturbed}, recorded, host,
            clock=FixedClock(),
        )
    assert exc_info.value.seq == 2  # first transfer touching the input


def test_replay_empty_journal():
    host = InProcessHost(["t1", "t2", "t3"])
    replayed = replay(
        small_spec(), small_graph(), {"cohort": cohort_artifact()}, [], host,
        clock=FixedClock(),
    )
    assert replayed == []
