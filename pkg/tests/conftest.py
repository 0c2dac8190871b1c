"""Shared fixtures: an in-process tool host, cohort table, and PNG helpers."""

from __future__ import annotations

import io
import json
from pathlib import Path

import pytest
from PIL import Image

from chainweave.data import BlobData, DataArtifact, TabularData, fresh_artifact_id
from chainweave.errors import AlreadyActive, LaunchFailed, NotActive, SourceUnavailable
from chainweave.graph import LaunchSpec, ToolDescriptor
from chainweave.host import ACTIVE, INACTIVE


def solid_png(color: tuple[int, int, int], size: tuple[int, int] = (64, 64)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", size, color).save(buf, format="PNG")
    return buf.getvalue()


def png_pixel(data: bytes, x: int, y: int) -> tuple[int, int, int]:
    return Image.open(io.BytesIO(data)).convert("RGB").getpixel((x, y))


def cohort_table() -> TabularData:
    """33 patient rows plus 40 control rows with clinical-style columns."""
    rows = []
    for i in range(33):
        rows.append((f"p{i:02d}", "patient", str(30 + (i * 7) % 40), f"{21 + i % 12}.{i % 10}"))
    for i in range(40):
        rows.append((f"c{i:02d}", "control", str(25 + (i * 5) % 45), f"{20 + i % 11}.{(i * 3) % 10}"))
    return TabularData(
        columns=(("id", "text"), ("group", "text"), ("age", "number"), ("bmi", "number")),
        rows=tuple(rows),
    )


def cohort_artifact(artifact_id: str = "cohort") -> DataArtifact:
    return DataArtifact(id=artifact_id, payload=cohort_table())


def make_tool(
    tool_id: str,
    command: tuple[str, ...] = ("{python}", "-m", "chainweave.mock_tool", "script.json"),
    inputs: tuple[tuple[str, str], ...] = (("in", "tabular"),),
    outputs: tuple[tuple[str, str], ...] = (("out", "tabular"),),
) -> ToolDescriptor:
    return ToolDescriptor(
        id=tool_id,
        name=tool_id,
        launch=LaunchSpec(command=command),
        input_channels=inputs,
        output_channels=outputs,
    )


class InProcessHost:
    """Tool-host stand-in without subprocesses, for fast engine tests.

    Exports resolve in order: scripted value for (tool, channel), then the
    echo mapping back to a previously loaded input channel.
    """

    def __init__(self, tool_ids):
        self.states = {tid: INACTIVE for tid in tool_ids}
        self.loads: list[tuple[str, str, DataArtifact]] = []
        self.geometries: list[tuple[str, tuple[int, int, int, int]]] = []
        self.exports: dict[tuple[str, str], DataArtifact] = {}
        self.snapshots: dict[str, BlobData] = {}
        self.echo: dict[tuple[str, str], str] = {}
        self.loaded: dict[tuple[str, str], DataArtifact] = {}
        self.fail_activate: set[str] = set()
        self.activation_log: list[tuple[str, str]] = []

    def state(self, tool_id: str) -> str:
        return self.states[tool_id]

    def active_tool_ids(self) -> set[str]:
        return {tid for tid, s in self.states.items() if s == ACTIVE}

    def activate(self, tool_id: str):
        if tool_id in self.fail_activate:
            raise LaunchFailed(f"scripted launch failure for {tool_id!r}", subject=tool_id)
        if self.states[tool_id] == ACTIVE:
            raise AlreadyActive(f"{tool_id!r} already active", subject=tool_id)
        self.states[tool_id] = ACTIVE
        self.activation_log.append(("activate", tool_id))

    def deactivate(self, tool_id: str):
        if self.states[tool_id] != ACTIVE:
            raise NotActive(f"{tool_id!r} not active", subject=tool_id)
        self.states[tool_id] = INACTIVE
        self.activation_log.append(("deactivate", tool_id))

    def load_data(self, tool_id: str, channel: str, artifact: DataArtifact):
        if self.states[tool_id] != ACTIVE:
            raise NotActive(f"{tool_id!r} not active", subject=tool_id)
        self.loads.append((tool_id, channel, artifact))
        self.loaded[(tool_id, channel)] = artifact

    def export_data(self, tool_id: str, channel: str, origin_seq=None) -> DataArtifact:
        if self.states[tool_id] != ACTIVE:
            raise NotActive(f"{tool_id!r} not active", subject=tool_id)
        key = (tool_id, channel)
        if key in self.exports:
            template = self.exports[key]
        elif key in self.echo and (tool_id, self.echo[key]) in self.loaded:
            template = self.loaded[(tool_id, self.echo[key])]
        else:
            raise SourceUnavailable(f"nothing to export on {key!r}", subject=tool_id)
        return DataArtifact(
            id=fresh_artifact_id(),
            payload=template.payload,
            origin_tool=tool_id,
            origin_seq=origin_seq,
        )

    def set_geometry(self, tool_id: str, region, screen):
        if self.states[tool_id] != ACTIVE:
            raise NotActive(f"{tool_id!r} not active", subject=tool_id)
        rect = region.to_pixels(screen[0], screen[1])
        self.geometries.append((tool_id, rect))
        return {"applied": rect}

    def snapshot(self, tool_id: str) -> BlobData:
        if self.states[tool_id] != ACTIVE:
            raise NotActive(f"{tool_id!r} not active", subject=tool_id)
        if tool_id not in self.snapshots:
            self.snapshots[tool_id] = BlobData("image/png", solid_png((12, 34, 56)))
        return self.snapshots[tool_id]

    def shutdown(self):
        for tid in self.states:
            self.states[tid] = INACTIVE


class FixedClock:
    """Deterministic clock: each call advances by one second."""

    def __init__(self, start: float = 1000.0):
        self.now = start

    def __call__(self) -> float:
        self.now += 1.0
        return self.now


@pytest.fixture
def fixed_clock() -> FixedClock:
    return FixedClock()


def write_mock_script(directory: Path, name: str, script: dict) -> Path:
    path = directory / name
    path.write_text(json.dumps(script, indent=2), encoding="utf-8")
    return path
