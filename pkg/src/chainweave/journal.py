"""Session journal: activation records with statuses, notes, captures, transfers.

The journal is append-only. Removal of a capture tombstones it; updating a
capture appends a successor and links the chain via superseded_by.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .data import DataArtifact
from .errors import DocumentSyntaxError


class StepStatus(Enum):
    PENDING = "pending"
    DONE = "done"
    PAUSED = "paused"
    CANCELED = "canceled"


@dataclass(frozen=True)
class Note:
    timestamp: float
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("note text must be non-empty")


@dataclass
class Capture:
    """A snapshot of tool content kept as an intermediate result."""

    id: str
    label: str
    image_ref: str
    source_tool_id: str | None
    taken_at: float
    superseded_by: str | None = None
    removed: bool = False

    @property
    def live(self) -> bool:
        return not self.removed and self.superseded_by is None


@dataclass(frozen=True)
class TransferRecord:
    link_id: str
    in_artifact_id: str
    out_artifact_id: str
    timestamp: float
    activation_seq: int
    in_hash: str
    out_hash: str


@dataclass
class ActivationRecord:
    """One journal entry per step entry, owning its own notes and captures."""

    seq: int
    step_id: str
    entered_at: float
    status: StepStatus = StepStatus.PENDING
    notes: list[Note] = field(default_factory=list)
    captures: list[Capture] = field(default_factory=list)
    transfers: list[TransferRecord] = field(default_factory=list)
    status_history: list[tuple[float, StepStatus]] = field(default_factory=list)


@dataclass
class Session:
    """Runtime state of one workflow execution."""

    journal: list[ActivationRecord] = field(default_factory=list)
    current_seq: int | None = None
    data_store: dict[str, DataArtifact] = field(default_factory=dict)
    #: Latest exported artifact id per (tool id, output channel).
    channel_cache: dict[tuple[str, str], str] = field(default_factory=dict)

    def record(self, seq: int) -> ActivationRecord | None:
        for rec in self.journal:
            if rec.seq == seq:
                return rec
        return None

    def current_record(self) -> ActivationRecord | None:
        if self.current_seq is None:
            return None
        return self.record(self.current_seq)

    def find_capture(self, capture_id: str) -> tuple[ActivationRecord, Capture] | None:
        for rec in self.journal:
            for cap in rec.captures:
                if cap.id == capture_id:
                    return rec, cap
        return None


# --- nested record serialization (service responses) ------------------------------

def note_to_obj(note: Note) -> dict:
    return {"at": note.timestamp, "text": note.text}


def capture_to_obj(capture: Capture) -> dict:
    return {
        "id": capture.id,
        "label": capture.label,
        "image": capture.image_ref,
        "tool": capture.source_tool_id,
        "at": capture.taken_at,
        "supersededBy": capture.superseded_by,
        "removed": capture.removed,
    }


def transfer_to_obj(transfer: TransferRecord) -> dict:
    return {
        "link": transfer.link_id,
        "in": transfer.in_artifact_id,
        "out": transfer.out_artifact_id,
        "at": transfer.timestamp,
        "seq": transfer.activation_seq,
        "inHash": transfer.in_hash,
        "outHash": transfer.out_hash,
    }


def record_to_obj(record: ActivationRecord) -> dict:
    return {
        "seq": record.seq,
        "step": record.step_id,
        "enteredAt": record.entered_at,
        "status": record.status.value,
        "notes": [note_to_obj(n) for n in record.notes],
        "captures": [capture_to_obj(c) for c in record.captures],
        "transfers": [transfer_to_obj(t) for t in record.transfers],
    }


# --- journal event serialization ------------------------------------------------

def record_to_events(record: ActivationRecord) -> list[dict]:
    """Flatten one activation record into its journal event lines."""
    events: list[dict] = [
        {
            "event": "activation",
            "seq": record.seq,
            "step": record.step_id,
            "at": record.entered_at,
            "status": record.status.value,
        }
    ]
    for t in record.transfers:
        events.append(
            {
                "event": "transfer",
                "seq": t.activation_seq,
                "link": t.link_id,
                "in": t.in_artifact_id,
                "out": t.out_artifact_id,
                "inHash": t.in_hash,
                "outHash": t.out_hash,
                "at": t.timestamp,
            }
        )
    for n in record.notes:
        events.append({"event": "note", "seq": record.seq, "at": n.timestamp, "text": n.text})
    for c in record.captures:
        events.append(
            {
                "event": "capture",
                "seq": record.seq,
                "id": c.id,
                "label": c.label,
                "image": c.image_ref,
                "tool": c.source_tool_id,
                "at": c.taken_at,
                "supersededBy": c.superseded_by,
                "removed": c.removed,
            }
        )
    for at, status in record.status_history:
        events.append({"event": "status", "seq": record.seq, "status": status.value, "at": at})
    return events


def journal_to_events(journal: list[ActivationRecord]) -> list[dict]:
    events: list[dict] = []
    for record in journal:
        events.extend(record_to_events(record))
    return events


def events_to_journal(events: list[dict]) -> list[ActivationRecord]:
    """Rebuild activation records from journal event lines."""
    records: dict[int, ActivationRecord] = {}
    order: list[int] = []
    for ev in events:
        kind = ev.get("event")
        seq = int(ev["seq"])
        if kind == "activation":
            rec = ActivationRecord(
                seq=seq,
                step_id=str(ev["step"]),
                entered_at=float(ev["at"]),
                status=StepStatus(ev.get("status", "pending")),
            )
            records[seq] = rec
            order.append(seq)
            continue
        rec = records.get(seq)
        if rec is None:
            raise DocumentSyntaxError(f"journal event for unknown activation seq {seq}")
        if kind == "transfer":
            rec.transfers.append(
                TransferRecord(
                    link_id=str(ev["link"]),
                    in_artifact_id=str(ev["in"]),
                    out_artifact_id=str(ev["out"]),
                    timestamp=float(ev["at"]),
                    activation_seq=seq,
                    in_hash=str(ev["inHash"]),
                    out_hash=str(ev["outHash"]),
                )
            )
        elif kind == "note":
            rec.notes.append(Note(timestamp=float(ev["at"]), text=str(ev["text"])))
        elif kind == "capture":
            rec.captures.append(
                Capture(
                    id=str(ev["id"]),
                    label=str(ev["label"]),
                    image_ref=str(ev["image"]),
                    source_tool_id=ev.get("tool"),
                    taken_at=float(ev["at"]),
                    superseded_by=ev.get("supersededBy"),
                    removed=bool(ev.get("removed", False)),
                )
            )
        elif kind == "status":
            status = StepStatus(ev["status"])
            rec.status_history.append((float(ev["at"]), status))
            rec.status = status
        else:
            raise DocumentSyntaxError(f"unknown journal event kind {kind!r}")
    return [records[seq] for seq in order]


def write_journal(path: str | Path, journal: list[ActivationRecord]) -> None:
    lines = [json.dumps(ev, sort_keys=True) for ev in journal_to_events(journal)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_journal(path: str | Path) -> list[ActivationRecord]:
    events = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        try:
            events.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise DocumentSyntaxError(f"journal line is not valid JSON: {exc}") from exc
    return events_to_journal(events)


def transfer_log(journal: list[ActivationRecord]) -> list[tuple[int, str, str, str]]:
    """The deterministic transfer log compared by replay: seq, link, hashes."""
    log: list[tuple[int, str, str, str]] = []
    for record in journal:
        for t in record.transfers:
            log.append((t.activation_seq, t.link_id, t.in_hash, t.out_hash))
    return log


def transfer_log_bytes(journal: list[ActivationRecord]) -> bytes:
    """Canonical byte serialization of the transfer log for exact comparison."""
    lines = [
        json.dumps({"seq": s, "link": l, "inHash": i, "outHash": o}, sort_keys=True)
        for s, l, i, o in transfer_log(journal)
    ]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
