"""Session state machine: step entry drives activation diffs, transfers,
layout pushes, and provenance journaling.

All mutating operations go through one engine instance and are serialized
by an internal lock (single logical writer).
"""

from __future__ import annotations

import logging
import threading
import time
from typing import Callable

from .data import BlobData, DataArtifact
from .errors import (
    ActivationFailure,
    ChainweaveError,
    DocumentValidationError,
    Finding,
    IllegalTransition,
    InvalidGraph,
    InvalidSpec,
    MissingDataSource,
    NoActiveStep,
    NotActive,
    ReplayDivergence,
    SourceUnavailable,
    UnknownCapture,
    UnknownSeq,
)
from .graph import CoordinationGraph, LinkKind, toolset_for_step, validate_graph
from .host import ACTIVE
from .journal import (
    ActivationRecord,
    Capture,
    Note,
    Session,
    StepStatus,
    TransferRecord,
    transfer_log,
)
from .layout import LayoutStore
from .transfer import execute_transfer, source_available
from .workflow import WorkflowSpec, validate_workflow

log = logging.getLogger(__name__)

EventHook = Callable[[str, dict], None]


def compute_activation_diff(
    previous: frozenset[str] | set[str], nxt: frozenset[str] | set[str]
) -> tuple[frozenset[str], frozenset[str], frozenset[str]]:
    """(activate, keep, deactivate) tool-id sets for a toolset change."""
    previous = frozenset(previous)
    nxt = frozenset(nxt)
    return nxt - previous, nxt & previous, previous - nxt


class ExecutionEngine:
    """Drives one session of a validated workflow against a tool host."""

    def __init__(
        self,
        spec: WorkflowSpec,
        graph: CoordinationGraph,
        host,
        clock: Callable[[], float] = time.time,
        screen: tuple[int, int] = (1920, 1080),
        on_event: EventHook | None = None,
    ):
        self.spec = spec
        self.graph = graph
        self.host = host
        self.clock = clock
        self.screen = screen
        self.on_event = on_event
        self.session: Session | None = None
        self.findings: list[Finding] = []
        self._lock = threading.RLock()
        self._artifact_counter = 0
        self._capture_counter = 0

    # --- internals -------------------------------------------------------------

    def _emit(self, kind: str, payload: dict) -> None:
        if self.on_event is not None:
            self.on_event(kind, payload)

    def _alloc_artifact_id(self) -> str:
        self._artifact_counter += 1
        return f"a{self._artifact_counter}"

    def _alloc_capture_id(self) -> str:
        self._capture_counter += 1
        return f"c{self._capture_counter}"

    def _require_session(self) -> Session:
        if self.session is None:
            raise NoActiveStep("no session started")
        return self.session

    def _finding(self, code: str, subject: str, message: str) -> None:
        finding = Finding(code, subject, message)
        self.findings.append(finding)
        log.warning("%s", message)

    # --- session lifecycle -------------------------------------------------------

    def start_session(self, input_artifacts: dict[str, DataArtifact]) -> Session:
        """Validate spec and graph, seed the data store, start with empty journal."""
        with self._lock:
            spec_report = validate_workflow(self.spec)
            if not spec_report.ok:
                raise InvalidSpec("workflow spec has validation findings", spec_report)
            graph_report = validate_graph(self.spec, self.graph)
            if not graph_report.ok:
                raise InvalidGraph("coordination graph has validation findings", graph_report)
            missing = [
                sid for sid in self.graph.data_source_ids() if sid not in input_artifacts
            ]
            if missing:
                raise MissingDataSource(
                    f"missing input artifacts: {sorted(missing)}", sorted(missing)
                )
            self.session = Session(data_store=dict(input_artifacts))
            return self.session

    def _current_step_id(self) -> str | None:
        session = self._require_session()
        record = session.current_record()
        return record.step_id if record else None

    def _check_transition(self, step_id: str) -> None:
        session = self._require_session()
        if not self.spec.has_step(step_id):
            raise IllegalTransition(f"unknown step {step_id!r}", subject=step_id)
        current = self._current_step_id()
        if current is None:
            if step_id not in self.spec.start_step_ids:
                raise IllegalTransition(
                    f"step {step_id!r} is not a start step", subject=step_id
                )
            return
        if not self.spec.has_transition(current, step_id):
            raise IllegalTransition(
                f"no transition {current!r} -> {step_id!r} in the workflow", subject=step_id
            )

    def enter_step(self, step_id: str) -> ActivationRecord:
        """Activate the step's toolset, run its transfers, arrange views.

        Appends a new activation record (fresh notes and captures per visit).
        On activation failure the engine rolls back to the previous active
        set where possible and appends the record with status canceled.
        """
        with self._lock:
            session = self._require_session()
            self._check_transition(step_id)

            current = self._current_step_id()
            prev_tools: frozenset[str] = (
                toolset_for_step(self.graph, current).member_tool_ids
                if current is not None
                else frozenset()
            )
            next_toolset = toolset_for_step(self.graph, step_id)
            next_tools = next_toolset.member_tool_ids
            activate, keep, deactivate = compute_activation_diff(prev_tools, next_tools)
            seq = len(session.journal) + 1

            # Phase 1: bring up arriving tools; departing tools stay alive so
            # live hand-off exports can still reach them.
            started: list[str] = []
            try:
                for tool_id in sorted(activate):
                    self.host.activate(tool_id)
                    started.append(tool_id)
                    self._emit("tool-state-changed", {"tool": tool_id, "state": "active"})
            except ChainweaveError as exc:
                for tool_id in reversed(started):
                    try:
                        self.host.deactivate(tool_id)
                        self._emit("tool-state-changed", {"tool": tool_id, "state": "inactive"})
                    except ChainweaveError:
                        pass
                record = ActivationRecord(
                    seq=seq,
                    step_id=step_id,
                    entered_at=self.clock(),
                    status=StepStatus.CANCELED,
                )
                session.journal.append(record)
                raise ActivationFailure(
                    f"entering step {step_id!r} failed: {exc}", subject=step_id
                ) from exc

            # Phase 2: feed designated workflow inputs into freshly started tools.
            for tool_id in sorted(activate):
                for source in sorted(self.graph.data_sources, key=lambda d: d.artifact_id):
                    if source.tool_id != tool_id:
                        continue
                    artifact = session.data_store.get(source.artifact_id)
                    if artifact is None:
                        continue
                    try:
                        self.host.load_data(tool_id, source.channel, artifact)
                    except ChainweaveError as exc:
                        self._finding(
                            "SKIPPED_INPUT",
                            source.artifact_id,
                            f"input {source.artifact_id!r} not loaded into {tool_id!r}: {exc}",
                        )

            # Phase 3: run data-flow links into the new toolset, deterministic order.
            transfers: list[TransferRecord] = []
            for link in sorted(self.graph.links, key=lambda l: l.id):
                if link.kind is not LinkKind.DATA_FLOW:
                    continue
                if link.target_tool_id not in next_tools:
                    continue
                if not source_available(link, session, self.host):
                    self._finding(
                        "SKIPPED_TRANSFER",
                        link.id,
                        f"link {link.id!r} skipped: source data unavailable",
                    )
                    continue
                try:
                    record_t = execute_transfer(
                        link,
                        graph=self.graph,
                        host=self.host,
                        session=session,
                        clock=self.clock,
                        activation_seq=seq,
                        alloc_id=self._alloc_artifact_id,
                    )
                except SourceUnavailable as exc:
                    self._finding(
                        "SKIPPED_TRANSFER", link.id, f"link {link.id!r} skipped: {exc}"
                    )
                    continue
                except ChainweaveError as exc:
                    self._finding(
                        "TRANSFER_FAILED", link.id, f"link {link.id!r} failed: {exc}"
                    )
                    continue
                transfers.append(record_t)
                self._emit(
                    "transfer-completed",
                    {
                        "link": record_t.link_id,
                        "seq": seq,
                        "in": record_t.in_artifact_id,
                        "out": record_t.out_artifact_id,
                    },
                )

            # Phase 4: retire departing tools.
            for tool_id in sorted(deactivate):
                try:
                    self.host.deactivate(tool_id)
                except NotActive:
                    pass
                self._emit("tool-state-changed", {"tool": tool_id, "state": "inactive"})

            # Phase 5: arrange the views of the (now complete) toolset.
            store = LayoutStore(self.graph.layouts)
            regions, order = store.resolve(step_id, next_toolset.id, next_tools)
            for region, tool_id in zip(regions, order):
                try:
                    self.host.set_geometry(tool_id, region, self.screen)
                except ChainweaveError as exc:
                    self._finding(
                        "GEOMETRY_FAILED", tool_id, f"geometry push to {tool_id!r} failed: {exc}"
                    )

            record = ActivationRecord(
                seq=seq, step_id=step_id, entered_at=self.clock(), transfers=transfers
            )
            session.journal.append(record)
            session.current_seq = seq
            self._emit("step-entered", {"step": step_id, "seq": seq})
            return record

    # --- documentation of work -----------------------------------------------------

    def set_status(self, seq: int, status: StepStatus) -> ActivationRecord:
        with self._lock:
            session = self._require_session()
            record = session.record(seq)
            if record is None:
                raise UnknownSeq(f"no activation record with seq {seq}", subject=str(seq))
            record.status = status
            record.status_history.append((self.clock(), status))
            self._emit("status-changed", {"seq": seq, "status": status.value})
            return record

    def add_note(self, text: str) -> Note:
        with self._lock:
            session = self._require_session()
            record = session.current_record()
            if record is None:
                raise NoActiveStep("no active step to attach the note to")
            if not text:
                raise DocumentValidationError("note text must be non-empty")
            note = Note(timestamp=self.clock(), text=text)
            record.notes.append(note)
            self._emit("note-added", {"seq": record.seq, "text": text})
            return note

    def _capture_image(self, tool_id: str | None, image: BlobData | None) -> tuple[str, str | None]:
        """Store the capture image and return (artifact id, source tool)."""
        session = self._require_session()
        if (tool_id is None) == (image is None):
            raise DocumentValidationError("capture needs exactly one of tool or image")
        if tool_id is not None:
            image = self.host.snapshot(tool_id)
        assert image is not None
        artifact_id = self._alloc_artifact_id()
        session.data_store[artifact_id] = DataArtifact(
            id=artifact_id, payload=image, origin_tool=tool_id or "external"
        )
        return artifact_id, tool_id

    def add_capture(
        self, label: str, tool_id: str | None = None, image: BlobData | None = None
    ) -> Capture:
        """Snapshot a tool (or accept a supplied image) as an intermediate result."""
        with self._lock:
            session = self._require_session()
            record = session.current_record()
            if record is None:
                raise NoActiveStep("no active step to attach the capture to")
            artifact_id, source = self._capture_image(tool_id, image)
            capture = Capture(
                id=self._alloc_capture_id(),
                label=label,
                image_ref=artifact_id,
                source_tool_id=source,
                taken_at=self.clock(),
            )
            record.captures.append(capture)
            self._emit("capture-added", {"seq": record.seq, "capture": capture.id})
            return capture

    def update_capture(
        self, capture_id: str, tool_id: str | None = None, image: BlobData | None = None
    ) -> Capture:
        """Refresh a capture: a successor is appended, the chain stays intact."""
        with self._lock:
            session = self._require_session()
            found = session.find_capture(capture_id)
            if found is None:
                raise UnknownCapture(f"unknown capture {capture_id!r}", subject=capture_id)
            record, old = found
            if not old.live:
                raise UnknownCapture(
                    f"capture {capture_id!r} is superseded or removed", subject=capture_id
                )
            if tool_id is None and image is None:
                if old.source_tool_id is None:
                    raise DocumentValidationError(
                        "capture has no source tool; supply a replacement image"
                    )
                tool_id = old.source_tool_id
            artifact_id, source = self._capture_image(tool_id, image)
            successor = Capture(
                id=self._alloc_capture_id(),
                label=old.label,
                image_ref=artifact_id,
                source_tool_id=source,
                taken_at=self.clock(),
            )
            record.captures.append(successor)
            old.superseded_by = successor.id
            self._emit(
                "capture-added",
                {"seq": record.seq, "capture": successor.id, "supersedes": old.id},
            )
            return successor

    def remove_capture(self, capture_id: str) -> Capture:
        """Tombstone a capture; the journal keeps the entry."""
        with self._lock:
            session = self._require_session()
            found = session.find_capture(capture_id)
            if found is None:
                raise UnknownCapture(f"unknown capture {capture_id!r}", subject=capture_id)
            record, capture = found
            capture.removed = True
            self._emit("capture-removed", {"seq": record.seq, "capture": capture.id})
            return capture


def replay(
    spec: WorkflowSpec,
    graph: CoordinationGraph,
    inputs: dict[str, DataArtifact],
    recorded_journal: list[ActivationRecord],
    host,
    clock: Callable[[], float] = time.time,
) -> list[ActivationRecord]:
    """Re-execute the recorded step sequence and verify transfer equality.

    Raises ReplayDivergence at the first transfer whose link id or payload
    hashes differ from the recording.
    """
    engine = ExecutionEngine(spec, graph, host, clock=clock)
    engine.start_session(inputs)
    try:
        for recorded in recorded_journal:
            if recorded.status is StepStatus.CANCELED:
                continue
            replayed = engine.enter_step(recorded.step_id)
            expected = [(t.link_id, t.in_hash, t.out_hash) for t in recorded.transfers]
            actual = [(t.link_id, t.in_hash, t.out_hash) for t in replayed.transfers]
            if expected != actual:
                for i, (exp, act) in enumerate(zip(expected, actual)):
                    if exp != act:
                        raise ReplayDivergence(
                            f"activation {recorded.seq}, transfer {i}: recorded {exp}, replayed {act}",
                            seq=recorded.seq,
                        )
                raise ReplayDivergence(
                    f"activation {recorded.seq}: recorded {len(expected)} transfers, "
                    f"replayed {len(actual)}",
                    seq=recorded.seq,
                )
        assert engine.session is not None
        return engine.session.journal
    finally:
        if hasattr(host, "shutdown"):
            host.shutdown()


def replay_matches(recorded: list[ActivationRecord], replayed: list[ActivationRecord]) -> bool:
    """Exact transfer-log equality between two journals."""
    return transfer_log(recorded) == transfer_log(replayed)
