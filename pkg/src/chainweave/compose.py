"""Collecting captured intermediate results and composing them into one image.

Rendering is deterministic: nearest-neighbor scaling, white background,
ascending z-order painting. The manifest records where every part came
from (step, activation) so the final figure stays traceable.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

from PIL import Image

from .data import BlobData
from .errors import (
    DeadCapture,
    EmptyComposition,
    MissingImage,
    UnknownCapture,
)
from .journal import ActivationRecord, Capture, Session
from .layout import Region


@dataclass(frozen=True)
class PlacedCapture:
    capture_id: str
    region: Region
    z_order: int


@dataclass
class SummaryComposition:
    id: str
    canvas: tuple[int, int]
    title: str = ""
    placements: list[PlacedCapture] = field(default_factory=list)

    def __post_init__(self):
        if self.canvas[0] <= 0 or self.canvas[1] <= 0:
            raise ValueError("canvas dimensions must be positive")


@dataclass(frozen=True)
class CaptureGroup:
    seq: int
    step_id: str
    captures: tuple[Capture, ...]


def list_intermediate_results(
    session: Session, include_dead: bool = False
) -> list[CaptureGroup]:
    """Captures grouped by activation record, in activation order.

    Superseded and removed captures are excluded unless include_dead is set.
    """
    groups: list[CaptureGroup] = []
    for record in session.journal:
        captures = tuple(
            c for c in record.captures if include_dead or c.live
        )
        if captures:
            groups.append(CaptureGroup(seq=record.seq, step_id=record.step_id, captures=captures))
    return groups


def _resolve_capture(session: Session, capture_id: str) -> tuple[ActivationRecord, Capture]:
    found = session.find_capture(capture_id)
    if found is None:
        raise UnknownCapture(f"unknown capture {capture_id!r}", subject=capture_id)
    record, capture = found
    if not capture.live:
        raise DeadCapture(f"capture {capture_id!r} is superseded or removed", subject=capture_id)
    return record, capture


def place_capture(
    composition: SummaryComposition, session: Session, capture_id: str, region: Region
) -> SummaryComposition:
    """Append a placement on top of everything placed before."""
    _resolve_capture(session, capture_id)
    next_z = max((p.z_order for p in composition.placements), default=0) + 1
    composition.placements.append(
        PlacedCapture(capture_id=capture_id, region=region, z_order=next_z)
    )
    return composition


def export_composite(
    composition: SummaryComposition, session: Session
) -> tuple[BlobData, dict]:
    """Render the composition to a PNG blob plus a provenance manifest."""
    if not composition.placements:
        raise EmptyComposition("composition has no placements")
    width, height = composition.canvas
    canvas = Image.new("RGB", (width, height), (255, 255, 255))
    manifest_entries = []
    for placement in sorted(composition.placements, key=lambda p: p.z_order):
        record, capture = _resolve_capture(session, placement.capture_id)
        artifact = session.data_store.get(capture.image_ref)
        if artifact is None or not isinstance(artifact.payload, BlobData):
            raise MissingImage(
                f"capture {capture.id!r} references missing image {capture.image_ref!r}",
                subject=capture.image_ref,
            )
        try:
            image = Image.open(io.BytesIO(artifact.payload.data)).convert("RGB")
        except Exception as exc:
            raise MissingImage(f"capture {capture.id!r} image cannot be decoded: {exc}") from exc
        x, y, w, h = placement.region.to_pixels(width, height)
        scaled = image.resize((max(w, 1), max(h, 1)), Image.NEAREST)
        canvas.paste(scaled, (x, y))
        manifest_entries.append(
            {
                "capture": capture.id,
                "label": capture.label,
                "step": record.step_id,
                "seq": record.seq,
                "pixelRect": [x, y, w, h],
                "z": placement.z_order,
            }
        )
    buf = io.BytesIO()
    canvas.save(buf, format="PNG")
    manifest = {
        "composition": composition.id,
        "title": composition.title,
        "canvas": [width, height],
        "placements": manifest_entries,
    }
    return BlobData(media_type="image/png", data=buf.getvalue()), manifest
