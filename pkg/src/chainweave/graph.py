"""Coordination graph: tools, toolsets, links, and step bindings.

Graph values are immutable snapshots; mutating operations return new
snapshots so concurrent readers never observe partial edits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum

from .data import TransformPipeline, pipeline_from_obj, pipeline_to_obj
from .errors import (
    DanglingReference,
    DocumentSyntaxError,
    DuplicateId,
    UnboundStep,
    ValidationReport,
)
from .layout import LayoutAssignment, layout_from_obj, layout_to_obj
from .workflow import WorkflowSpec


class LinkKind(Enum):
    ACTIVATION_ONLY = "activation"
    DATA_FLOW = "dataflow"


@dataclass(frozen=True)
class LaunchSpec:
    """How to start a tool process.

    Arguments may contain the placeholders ``{python}`` (current interpreter)
    and ``{base}`` (project base directory), substituted at launch time.
    """

    command: tuple[str, ...]

    def __post_init__(self):
        if not self.command:
            raise ValueError("launch command must not be empty")


@dataclass(frozen=True)
class ToolDescriptor:
    id: str
    name: str
    launch: LaunchSpec
    input_channels: tuple[tuple[str, str], ...] = ()
    output_channels: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        for channels in (self.input_channels, self.output_channels):
            names = [n for n, _ in channels]
            if len(set(names)) != len(names):
                raise ValueError(f"tool {self.id!r} has duplicate channel names")

    def input_format(self, channel: str) -> str | None:
        return dict(self.input_channels).get(channel)

    def output_format(self, channel: str) -> str | None:
        return dict(self.output_channels).get(channel)


@dataclass(frozen=True)
class Toolset:
    id: str
    member_tool_ids: frozenset[str]

    def __post_init__(self):
        if not self.member_tool_ids:
            raise ValueError(f"toolset {self.id!r} must have at least one member")


@dataclass(frozen=True)
class DataFlowSpec:
    source_channel: str
    target_channel: str
    pipeline_id: str


@dataclass(frozen=True)
class CoordinationLink:
    id: str
    source_tool_id: str
    target_tool_id: str
    kind: LinkKind
    data: DataFlowSpec | None = None

    def __post_init__(self):
        if self.kind is LinkKind.DATA_FLOW and self.data is None:
            raise ValueError(f"link {self.id!r}: data-flow links need a data spec")
        if self.kind is LinkKind.ACTIVATION_ONLY and self.data is not None:
            raise ValueError(f"link {self.id!r}: activation links carry no data spec")


@dataclass(frozen=True)
class StepBinding:
    step_id: str
    toolset_id: str
    layout_assignment_id: str | None = None


@dataclass(frozen=True)
class DataSourceBinding:
    """Designates an input artifact and the tool channel it feeds."""

    artifact_id: str
    tool_id: str
    channel: str


@dataclass(frozen=True)
class CoordinationGraph:
    tools: tuple[ToolDescriptor, ...] = ()
    toolsets: tuple[Toolset, ...] = ()
    links: tuple[CoordinationLink, ...] = ()
    bindings: tuple[StepBinding, ...] = ()
    data_sources: tuple[DataSourceBinding, ...] = ()
    pipelines: tuple[TransformPipeline, ...] = ()
    layouts: tuple[LayoutAssignment, ...] = ()

    # --- lookups ------------------------------------------------------------

    def tool(self, tool_id: str) -> ToolDescriptor | None:
        for t in self.tools:
            if t.id == tool_id:
                return t
        return None

    def toolset(self, toolset_id: str) -> Toolset | None:
        for ts in self.toolsets:
            if ts.id == toolset_id:
                return ts
        return None

    def link(self, link_id: str) -> CoordinationLink | None:
        for l in self.links:
            if l.id == link_id:
                return l
        return None

    def pipeline(self, pipeline_id: str) -> TransformPipeline | None:
        for p in self.pipelines:
            if p.id == pipeline_id:
                return p
        return None

    def binding(self, step_id: str) -> StepBinding | None:
        for b in self.bindings:
            if b.step_id == step_id:
                return b
        return None

    def layout(self, layout_id: str) -> LayoutAssignment | None:
        for a in self.layouts:
            if a.id == layout_id:
                return a
        return None

    def data_source_ids(self) -> list[str]:
        return [d.artifact_id for d in self.data_sources]


def toolset_for_step(graph: CoordinationGraph, step_id: str) -> Toolset:
    """The toolset bound to step_id; raises UnboundStep when no binding exists."""
    binding = graph.binding(step_id)
    if binding is None:
        raise UnboundStep(f"step {step_id!r} has no binding", subject=step_id)
    toolset = graph.toolset(binding.toolset_id)
    if toolset is None:
        raise DanglingReference(
            f"binding for step {step_id!r} references unknown toolset {binding.toolset_id!r}",
            subject=binding.toolset_id,
        )
    return toolset


# --- mutations (return new snapshots) ----------------------------------------

def add_link(graph: CoordinationGraph, link: CoordinationLink) -> CoordinationGraph:
    """Return a graph with the link added; validates all link references."""
    if graph.link(link.id) is not None:
        raise DuplicateId(f"link id {link.id!r} already exists", subject=link.id)
    source = graph.tool(link.source_tool_id)
    if source is None:
        raise DanglingReference(f"unknown source tool {link.source_tool_id!r}", subject=link.source_tool_id)
    target = graph.tool(link.target_tool_id)
    if target is None:
        raise DanglingReference(f"unknown target tool {link.target_tool_id!r}", subject=link.target_tool_id)
    if link.kind is LinkKind.DATA_FLOW:
        assert link.data is not None
        if link.source_tool_id == link.target_tool_id:
            raise DanglingReference(
                f"link {link.id!r}: data-flow source and target must differ", subject=link.id
            )
        if source.output_format(link.data.source_channel) is None:
            raise DanglingReference(
                f"tool {source.id!r} has no output channel {link.data.source_channel!r}",
                subject=link.data.source_channel,
            )
        if target.input_format(link.data.target_channel) is None:
            raise DanglingReference(
                f"tool {target.id!r} has no input channel {link.data.target_channel!r}",
                subject=link.data.target_channel,
            )
        if graph.pipeline(link.data.pipeline_id) is None:
            raise DanglingReference(
                f"unknown pipeline {link.data.pipeline_id!r}", subject=link.data.pipeline_id
            )
    return replace(graph, links=graph.links + (link,))


def remove_link(graph: CoordinationGraph, link_id: str) -> CoordinationGraph:
    if graph.link(link_id) is None:
        raise DanglingReference(f"unknown link {link_id!r}", subject=link_id)
    return replace(graph, links=tuple(l for l in graph.links if l.id != link_id))


def set_pipeline(graph: CoordinationGraph, pipeline: TransformPipeline) -> CoordinationGraph:
    others = tuple(p for p in graph.pipelines if p.id != pipeline.id)
    return replace(graph, pipelines=others + (pipeline,))


def add_data_source(graph: CoordinationGraph, source: DataSourceBinding) -> CoordinationGraph:
    tool = graph.tool(source.tool_id)
    if tool is None:
        raise DanglingReference(f"unknown tool {source.tool_id!r}", subject=source.tool_id)
    if tool.input_format(source.channel) is None:
        raise DanglingReference(
            f"tool {source.tool_id!r} has no input channel {source.channel!r}",
            subject=source.channel,
        )
    if source in graph.data_sources:
        raise DuplicateId(
            f"data source {source.artifact_id!r} already bound to "
            f"{source.tool_id}:{source.channel}",
            subject=source.artifact_id,
        )
    return replace(graph, data_sources=graph.data_sources + (source,))


def remove_data_source(graph: CoordinationGraph, artifact_id: str) -> CoordinationGraph:
    if not any(d.artifact_id == artifact_id for d in graph.data_sources):
        raise DanglingReference(f"unknown data source {artifact_id!r}", subject=artifact_id)
    return replace(
        graph, data_sources=tuple(d for d in graph.data_sources if d.artifact_id != artifact_id)
    )


def set_layout(graph: CoordinationGraph, assignment: LayoutAssignment) -> CoordinationGraph:
    others = tuple(a for a in graph.layouts if a.id != assignment.id)
    return replace(graph, layouts=others + (assignment,))


# --- required links ------------------------------------------------------------

def derive_required_links(
    spec: WorkflowSpec, graph: CoordinationGraph
) -> set[tuple[str, str]]:
    """Ordered tool pairs that must be linked so every transition can run.

    For a transition s -> t the pairs are those crossing the toolset
    boundary: (a, b) with a in toolset(s), b in toolset(t), and a departing
    or b arriving. Pairs inside an unchanged toolset are excluded.
    """
    required: set[tuple[str, str]] = set()
    for frm, to in spec.transitions:
        prev = toolset_for_step(graph, frm).member_tool_ids
        nxt = toolset_for_step(graph, to).member_tool_ids
        departing = prev - nxt
        arriving = nxt - prev
        for a in prev:
            for b in nxt:
                if a == b:
                    continue
                if a in departing or b in arriving:
                    required.add((a, b))
    return required


def validate_graph(spec: WorkflowSpec, graph: CoordinationGraph) -> ValidationReport:
    """Check cross-references and link coverage for every spec transition."""
    report = ValidationReport()
    tool_ids = {t.id for t in graph.tools}
    toolset_ids = {ts.id for ts in graph.toolsets}

    for ts in graph.toolsets:
        for member in sorted(ts.member_tool_ids):
            if member not in tool_ids:
                report.add("DANGLING_REFERENCE", member, f"toolset {ts.id!r} references unknown tool {member!r}")

    for link in graph.links:
        for endpoint in (link.source_tool_id, link.target_tool_id):
            if endpoint not in tool_ids:
                report.add("DANGLING_REFERENCE", endpoint, f"link {link.id!r} references unknown tool {endpoint!r}")
        if link.kind is LinkKind.DATA_FLOW and link.data is not None:
            source = graph.tool(link.source_tool_id)
            target = graph.tool(link.target_tool_id)
            if source is not None and source.output_format(link.data.source_channel) is None:
                report.add(
                    "DANGLING_REFERENCE",
                    link.data.source_channel,
                    f"link {link.id!r}: no output channel {link.data.source_channel!r} on {link.source_tool_id!r}",
                )
            if target is not None and target.input_format(link.data.target_channel) is None:
                report.add(
                    "DANGLING_REFERENCE",
                    link.data.target_channel,
                    f"link {link.id!r}: no input channel {link.data.target_channel!r} on {link.target_tool_id!r}",
                )
            if graph.pipeline(link.data.pipeline_id) is None:
                report.add(
                    "DANGLING_REFERENCE",
                    link.data.pipeline_id,
                    f"link {link.id!r} references unknown pipeline {link.data.pipeline_id!r}",
                )

    seen_steps: set[str] = set()
    for binding in graph.bindings:
        if binding.step_id in seen_steps:
            report.add("DUPLICATE_BINDING", binding.step_id, f"step {binding.step_id!r} bound twice")
        seen_steps.add(binding.step_id)
        if binding.toolset_id not in toolset_ids:
            report.add(
                "DANGLING_REFERENCE",
                binding.toolset_id,
                f"binding for {binding.step_id!r} references unknown toolset {binding.toolset_id!r}",
            )
        if binding.layout_assignment_id is not None and graph.layout(binding.layout_assignment_id) is None:
            report.add(
                "DANGLING_REFERENCE",
                binding.layout_assignment_id,
                f"binding for {binding.step_id!r} references unknown layout {binding.layout_assignment_id!r}",
            )

    for source in graph.data_sources:
        if source.tool_id not in tool_ids:
            report.add("DANGLING_REFERENCE", source.tool_id, f"data source {source.artifact_id!r} feeds unknown tool")

    unbound = [sid for sid in spec.step_ids() if graph.binding(sid) is None]
    for sid in unbound:
        report.add("UNBOUND_STEP", sid, f"step {sid!r} has no toolset binding")

    # Link coverage only makes sense once bindings resolve.
    if not unbound and not report.findings:
        present = {(l.source_tool_id, l.target_tool_id) for l in graph.links}
        for a, b in sorted(derive_required_links(spec, graph)):
            if (a, b) not in present:
                report.add("MISSING_LINK", f"{a}->{b}", f"no link from {a!r} to {b!r}")
    return report


# --- serialization ---------------------------------------------------------------

def graph_to_obj(graph: CoordinationGraph) -> dict:
    links = []
    for l in graph.links:
        entry: dict = {
            "id": l.id,
            "source": l.source_tool_id,
            "target": l.target_tool_id,
            "kind": l.kind.value,
        }
        if l.data is not None:
            entry["data"] = {
                "sourceChannel": l.data.source_channel,
                "targetChannel": l.data.target_channel,
                "pipeline": l.data.pipeline_id,
            }
        links.append(entry)
    return {
        "tools": [
            {
                "id": t.id,
                "name": t.name,
                "launch": {"command": list(t.launch.command)},
                "inputChannels": [{"name": n, "format": f} for n, f in t.input_channels],
                "outputChannels": [{"name": n, "format": f} for n, f in t.output_channels],
            }
            for t in graph.tools
        ],
        "toolsets": [
            {"id": ts.id, "members": sorted(ts.member_tool_ids)} for ts in graph.toolsets
        ],
        "links": links,
        "bindings": [
            {"step": b.step_id, "toolset": b.toolset_id, "layout": b.layout_assignment_id}
            for b in graph.bindings
        ],
        "dataSources": [
            {"id": d.artifact_id, "tool": d.tool_id, "channel": d.channel}
            for d in graph.data_sources
        ],
        "pipelines": [pipeline_to_obj(p) for p in graph.pipelines],
        "layouts": [layout_to_obj(a) for a in graph.layouts],
    }


def graph_from_obj(raw: object) -> CoordinationGraph:
    if not isinstance(raw, dict):
        raise DocumentSyntaxError("graph document must be a JSON object")
    try:
        tools = tuple(
            ToolDescriptor(
                id=str(t["id"]),
                name=str(t.get("name", t["id"])),
                launch=LaunchSpec(command=tuple(str(a) for a in t["launch"]["command"])),
                input_channels=tuple(
                    (str(c["name"]), str(c["format"])) for c in t.get("inputChannels", [])
                ),
                output_channels=tuple(
                    (str(c["name"]), str(c["format"])) for c in t.get("outputChannels", [])
                ),
            )
            for t in raw.get("tools", [])
        )
        toolsets = tuple(
            Toolset(id=str(ts["id"]), member_tool_ids=frozenset(str(m) for m in ts["members"]))
            for ts in raw.get("toolsets", [])
        )
        links = []
        for l in raw.get("links", []):
            data = None
            if l.get("data") is not None:
                data = DataFlowSpec(
                    source_channel=str(l["data"]["sourceChannel"]),
                    target_channel=str(l["data"]["targetChannel"]),
                    pipeline_id=str(l["data"]["pipeline"]),
                )
            links.append(
                CoordinationLink(
                    id=str(l["id"]),
                    source_tool_id=str(l["source"]),
                    target_tool_id=str(l["target"]),
                    kind=LinkKind(l["kind"]),
                    data=data,
                )
            )
        bindings = tuple(
            StepBinding(
                step_id=str(b["step"]),
                toolset_id=str(b["toolset"]),
                layout_assignment_id=b.get("layout"),
            )
            for b in raw.get("bindings", [])
        )
        data_sources = tuple(
            DataSourceBinding(
                artifact_id=str(d["id"]), tool_id=str(d["tool"]), channel=str(d["channel"])
            )
            for d in raw.get("dataSources", [])
        )
        pipelines = tuple(pipeline_from_obj(p) for p in raw.get("pipelines", []))
        layouts = tuple(layout_from_obj(a) for a in raw.get("layouts", []))
    except DocumentSyntaxError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentSyntaxError(f"malformed graph document: {exc}") from exc
    return CoordinationGraph(
        tools=tools,
        toolsets=toolsets,
        links=tuple(links),
        bindings=bindings,
        data_sources=data_sources,
        pipelines=pipelines,
        layouts=layouts,
    )


def parse_graph(document: str) -> CoordinationGraph:
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise DocumentSyntaxError(f"not valid JSON: {exc}") from exc
    return graph_from_obj(raw)
