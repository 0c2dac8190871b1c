#!/usr/bin/env python3
"""Regenerate the committed cross-sectional-study scenario fixture.

Produces fixtures/scenario/: a 9-step workflow over 8 mock tools, a cohort
table of 33 patients and 40 controls, one volume blob input, a scripted
walk with an analysis back-and-forth, and the golden journal plus transfer
log recorded from one verified run.

Usage: python3 fixtures/make_scenario.py
"""

from __future__ import annotations

import base64
import io
import json
import shutil
import subprocess
import sys
from pathlib import Path

from PIL import Image

from chainweave.data import (
    DataArtifact,
    FilterRows,
    FromDelimitedText,
    TransformPipeline,
    apply_pipeline,
    BlobData,
)
from chainweave.graph import (
    CoordinationGraph,
    CoordinationLink,
    DataFlowSpec,
    DataSourceBinding,
    LaunchSpec,
    LinkKind,
    StepBinding,
    ToolDescriptor,
    Toolset,
    derive_required_links,
    validate_graph,
)
from chainweave.journal import read_journal, transfer_log_bytes
from chainweave.layout import LayoutAssignment, LayoutTemplate, Region, TemplateKind
from chainweave.project import Project, save_project, write_artifact
from chainweave.workflow import Stage, WorkflowSpec, WorkflowStep, validate_workflow

ROOT = Path(__file__).parent / "scenario"

COHORT_HEADER = [("id", "text"), ("group", "text"), ("age", "number"), ("bmi", "number")]


def cohort_csv_text() -> str:
    lines = ["id,group,age,bmi"]
    for i in range(33):
        lines.append(f"p{i:02d},patient,{30 + (i * 7) % 40},{21 + i % 12}.{i % 10}")
    for i in range(40):
        lines.append(f"c{i:02d},control,{25 + (i * 5) % 45},{20 + i % 11}.{(i * 3) % 10}")
    return "\n".join(lines) + "\n"


def solid_png_b64(color: tuple[int, int, int]) -> str:
    buf = io.BytesIO()
    Image.new("RGB", (64, 64), color).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


TOOLS = {
    "t_records": {
        "name": "Clinical record system",
        "inputs": [("records-in", "tabular")],
        "outputs": [("records-out", "tabular")],
        "script": {"echo": {"records-out": "records-in"}, "snapshot": {"base64": solid_png_b64((120, 120, 130))}},
    },
    "t_octscan": {
        "name": "OCT acquisition",
        "inputs": [("scan-in", "blob")],
        "outputs": [("scan-out", "blob")],
        "script": {"echo": {"scan-out": "scan-in"}, "snapshot": {"base64": solid_png_b64((90, 70, 140))}},
    },
    "t_octproc": {
        "name": "OCT layer processing",
        "inputs": [("oct-in", "blob")],
        "outputs": [("thickness-out", "tabular")],
        "script": {
            "exports": {
                "thickness-out": {
                    "artifact": {
                        "id": "thickness",
                        "payload": {
                            "type": "tabular",
                            "columns": [["id", "text"], ["layer", "text"], ["thickness", "number"]],
                            "rows": [
                                ["p00", "RNFL", "31.5"],
                                ["p00", "GCL", "28.2"],
                                ["p01", "RNFL", "30.9"],
                                ["p01", "GCL", "27.4"],
                                ["c00", "RNFL", "33.8"],
                                ["c00", "GCL", "29.6"],
                            ],
                        },
                        "origin": {"tool": "t_octproc"},
                    }
                }
            },
            "snapshot": {"base64": solid_png_b64((60, 140, 90))},
        },
    },
    "t_sheet": {
        "name": "Spreadsheet",
        "inputs": [("table-in", "tabular"), ("thickness-in", "tabular")],
        "outputs": [("table-out", "tabular")],
        "script": {"echo": {"table-out": "table-in"}, "snapshot": {"base64": solid_png_b64((200, 200, 80))}},
    },
    "t_vaoct": {
        "name": "Retina explorer",
        "inputs": [("data-in", "tabular")],
        "outputs": [("selection-out", "tabular")],
        "script": {"echo": {"selection-out": "data-in"}, "snapshot": {"base64": solid_png_b64((220, 30, 30))}},
    },
    "t_vaclinical": {
        "name": "Clinical parameter explorer",
        "inputs": [("data-in", "tabular")],
        "outputs": [("selection-out", "tabular")],
        "script": {"echo": {"selection-out": "data-in"}, "snapshot": {"base64": solid_png_b64((20, 40, 210))}},
    },
    "t_rstats": {
        "name": "Statistics scripts",
        "inputs": [("data-in", "tabular")],
        "outputs": [("stats-out", "tabular")],
        "script": {
            "exports": {
                "stats-out": {
                    "artifact": {
                        "id": "stats",
                        "payload": {
                            "type": "tabular",
                            "columns": [["metric", "text"], ["value", "number"]],
                            "rows": [
                                ["t-test-p", "0.031"],
                                ["cohen-d", "0.42"],
                                ["n-patients", "33"],
                                ["n-controls", "40"],
                            ],
                        },
                        "origin": {"tool": "t_rstats"},
                    }
                }
            },
            "snapshot": {"base64": solid_png_b64((240, 160, 40))},
        },
    },
    "t_charts": {
        "name": "Charting tool",
        "inputs": [("data-in", "tabular")],
        "outputs": [],
        "script": {"snapshot": {"base64": solid_png_b64((40, 190, 60))}},
    },
}

STEPS = [
    ("s1", "Collect study data", Stage.PREPARATION,
     "Gather health records and OCT scans of all 73 participants.", "TS_collect"),
    ("s2", "Compute retinal thickness", Stage.PREPARATION,
     "Derive per-layer thickness values from the OCT volumes.", "TS_thickness"),
    ("s3", "Check data quality", Stage.PREPARATION,
     "Screen scans and records; flag exclusions next to the thickness sheet.", "TS_quality"),
    ("s4", "Assemble patient group", Stage.PREPARATION,
     "Select the 33 diabetic patients matching the study criteria.", "TS_groups"),
    ("s5", "Assemble control group", Stage.PREPARATION,
     "Select the 40 healthy controls.", "TS_groups"),
    ("s6", "Explore thickness differences", Stage.ANALYSIS,
     "Compare per-layer thickness between groups; mark conspicuous subsets.", "TS_oct"),
    ("s7", "Explore clinical parameters", Stage.ANALYSIS,
     "Relate findings to age, BMI, and further record parameters.", "TS_clin"),
    ("s8", "Quantify group differences", Stage.ANALYSIS,
     "Run hypothesis tests on the refined groups.", "TS_stats"),
    ("s9", "Summarize key findings", Stage.SUMMARIZATION,
     "Compile charts and captures into the study summary.", "TS_summary"),
]

TOOLSETS = {
    "TS_collect": {"t_records", "t_octscan"},
    "TS_thickness": {"t_octproc"},
    "TS_quality": {"t_octproc", "t_sheet"},
    "TS_groups": {"t_sheet"},
    "TS_oct": {"t_vaoct", "t_rstats"},
    "TS_clin": {"t_vaclinical", "t_rstats"},
    "TS_stats": {"t_rstats"},
    "TS_summary": {"t_charts"},
}

TRANSITIONS = [
    ("s1", "s2"), ("s2", "s3"), ("s3", "s4"), ("s4", "s5"), ("s5", "s6"),
    ("s6", "s7"), ("s7", "s8"), ("s8", "s9"),
    ("s7", "s6"), ("s8", "s7"),
]

PIPELINES = [
    TransformPipeline(id="identity"),
    TransformPipeline(id="patients", steps=(FilterRows("group", "=", "patient"),)),
    TransformPipeline(id="controls", steps=(FilterRows("group", "=", "control"),)),
]

# (id, source, target, kind, source channel, target channel, pipeline)
LINKS = [
    ("l01", "t_records", "t_octproc", "activation", None, None, None),
    ("l02", "t_octscan", "t_octproc", "dataflow", "scan-out", "oct-in", "identity"),
    ("l03", "t_octproc", "t_sheet", "dataflow", "thickness-out", "thickness-in", "identity"),
    ("l04", "t_sheet", "t_vaoct", "dataflow", "table-out", "data-in", "patients"),
    ("l05", "t_sheet", "t_rstats", "dataflow", "table-out", "data-in", "controls"),
    ("l06", "t_vaoct", "t_vaclinical", "dataflow", "selection-out", "data-in", "identity"),
    ("l07", "t_vaoct", "t_rstats", "dataflow", "selection-out", "data-in", "identity"),
    ("l08", "t_rstats", "t_vaclinical", "activation", None, None, None),
    ("l09", "t_vaclinical", "t_vaoct", "dataflow", "selection-out", "data-in", "identity"),
    ("l10", "t_vaclinical", "t_rstats", "dataflow", "selection-out", "data-in", "identity"),
    ("l11", "t_rstats", "t_vaoct", "activation", None, None, None),
    ("l12", "t_rstats", "t_charts", "dataflow", "stats-out", "data-in", "identity"),
]

LAYOUTS = [
    LayoutAssignment(
        id="v1", step_id="s1", toolset_id="TS_collect",
        template=LayoutTemplate(
            TemplateKind.CUSTOM,
            regions=(Region(0.0, 0.0, 0.6, 1.0), Region(0.6, 0.0, 0.4, 1.0)),
        ),
        slot_order=("t_records", "t_octscan"),
    ),
    LayoutAssignment(
        id="v2", step_id="s6", toolset_id="TS_oct",
        template=LayoutTemplate(
            TemplateKind.CUSTOM,
            regions=(Region(0.0, 0.0, 0.7, 1.0), Region(0.7, 0.0, 0.3, 1.0)),
        ),
        slot_order=("t_vaoct", "t_rstats"),
    ),
    LayoutAssignment(
        id="v3", step_id="s7", toolset_id="TS_clin",
        template=LayoutTemplate(
            TemplateKind.CUSTOM,
            regions=(Region(0.0, 0.0, 0.7, 1.0), Region(0.7, 0.0, 0.3, 1.0)),
        ),
        slot_order=("t_vaclinical", "t_rstats"),
    ),
]

WALK = {
    "screen": [1920, 1080],
    "actions": [
        {"enter": "s1"},
        {"note": "collected records and scans for 73 participants"},
        {"status": "done"},
        {"enter": "s2"},
        {"status": "done"},
        {"enter": "s3"},
        {"note": "two scans flagged for low quality"},
        {"capture": {"label": "quality overview", "tool": "t_sheet"}},
        {"status": "done"},
        {"enter": "s4"},
        {"status": "done"},
        {"enter": "s5"},
        {"status": "done"},
        {"enter": "s6"},
        {"capture": {"label": "thickness by group", "tool": "t_vaoct"}},
        {"status": "paused"},
        {"enter": "s7"},
        {"capture": {"label": "clinical parameters", "tool": "t_vaclinical"}},
        {"note": "outlier in control group"},
        {"status": "done"},
        {"enter": "s6"},
        {"capture": {"label": "thickness refined", "tool": "t_vaoct"}},
        {"status": "done"},
        {"enter": "s7"},
        {"status": "done"},
        {"enter": "s8"},
        {"note": "groups differ significantly after refinement"},
        {"capture": {"label": "statistics", "tool": "t_rstats"}},
        {"status": "done"},
        {"enter": "s9"},
        {"capture": {"label": "final chart", "tool": "t_charts"}},
        {"compose": {"id": "summary-1", "title": "Key findings", "canvas": [256, 256]}},
        {"place": {"composition": "summary-1", "capture": "c2", "region": [0.0, 0.0, 0.6, 0.6]}},
        {"place": {"composition": "summary-1", "capture": "c3", "region": [0.4, 0.4, 0.6, 0.6]}},
        {"status": "done"},
    ],
}


def build_graph() -> CoordinationGraph:
    tools = tuple(
        ToolDescriptor(
            id=tool_id,
            name=cfg["name"],
            launch=LaunchSpec(
                ("{python}", "-m", "chainweave.mock_tool", f"{{base}}/mock_scripts/{tool_id}.json")
            ),
            input_channels=tuple(cfg["inputs"]),
            output_channels=tuple(cfg["outputs"]),
        )
        for tool_id, cfg in TOOLS.items()
    )
    links = []
    for link_id, src, dst, kind, s_chan, t_chan, pipe in LINKS:
        data = None
        if kind == "dataflow":
            data = DataFlowSpec(source_channel=s_chan, target_channel=t_chan, pipeline_id=pipe)
        links.append(
            CoordinationLink(
                id=link_id, source_tool_id=src, target_tool_id=dst,
                kind=LinkKind(kind), data=data,
            )
        )
    bindings = tuple(
        StepBinding(step_id=sid, toolset_id=ts, layout_assignment_id=_layout_for(sid, ts))
        for sid, _, _, _, ts in STEPS
    )
    return CoordinationGraph(
        tools=tools,
        toolsets=tuple(
            Toolset(id=ts, member_tool_ids=frozenset(members))
            for ts, members in TOOLSETS.items()
        ),
        links=tuple(links),
        bindings=bindings,
        data_sources=(
            DataSourceBinding("cohort", "t_records", "records-in"),
            DataSourceBinding("cohort", "t_sheet", "table-in"),
            DataSourceBinding("octvol", "t_octscan", "scan-in"),
        ),
        pipelines=tuple(PIPELINES),
        layouts=tuple(LAYOUTS),
    )


def _layout_for(step_id: str, toolset_id: str) -> str | None:
    for a in LAYOUTS:
        if a.step_id == step_id and a.toolset_id == toolset_id:
            return a.id
    return None


def build_workflow() -> WorkflowSpec:
    return WorkflowSpec(
        steps=tuple(
            WorkflowStep(id=sid, name=name, stage=stage, description=desc, expected_toolset_id=ts)
            for sid, name, stage, desc, ts in STEPS
        ),
        transitions=tuple(TRANSITIONS),
        start_step_ids=("s1",),
    )


def main() -> int:
    if ROOT.exists():
        shutil.rmtree(ROOT)
    ROOT.mkdir(parents=True)
    (ROOT / "mock_scripts").mkdir()

    for tool_id, cfg in TOOLS.items():
        (ROOT / "mock_scripts" / f"{tool_id}.json").write_text(
            json.dumps(cfg["script"], indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    csv_text = cohort_csv_text()
    (ROOT / "cohort.csv").write_text(csv_text, encoding="utf-8")
    parse = TransformPipeline(
        id="parse-cohort", steps=(FromDelimitedText(",", tuple(COHORT_HEADER)),)
    )
    cohort = apply_pipeline(
        parse,
        DataArtifact(id="raw", payload=BlobData("text/csv", csv_text.encode("utf-8"))),
        new_id="cohort",
    )
    assert len(cohort.payload.rows) == 73
    write_artifact(ROOT / "artifacts", cohort)
    octvol = DataArtifact(
        id="octvol",
        payload=BlobData("application/x-oct-volume", bytes(range(256)) * 32),
    )
    write_artifact(ROOT / "artifacts", octvol)

    spec = build_workflow()
    graph = build_graph()
    assert validate_workflow(spec).ok
    report = validate_graph(spec, graph)
    assert report.ok, report.findings
    required = derive_required_links(spec, graph)
    assert len(required) == 12, sorted(required)

    project = Project(
        id="retina-study",
        workflow=spec,
        graph=graph,
        artifacts_dir="artifacts",
        session_refs=("golden/journal.jsonl",),
    )
    save_project(project, ROOT / "project.json")
    (ROOT / "walk.json").write_text(
        json.dumps(WALK, indent=2) + "\n", encoding="utf-8"
    )

    # Record the golden run.
    (ROOT / "golden").mkdir()
    result = subprocess.run(
        [
            sys.executable, "-m", "chainweave.cli", "run", str(ROOT / "project.json"),
            "--script", str(ROOT / "walk.json"),
            "--journal", str(ROOT / "golden" / "journal.jsonl"),
        ],
        capture_output=True,
        text=True,
    )
    if result.returncode != 0:
        print(result.stdout)
        print(result.stderr)
        return result.returncode
    journal = read_journal(ROOT / "golden" / "journal.jsonl")
    (ROOT / "golden" / "transfer_log.jsonl").write_bytes(transfer_log_bytes(journal))
    print(f"scenario written to {ROOT}")
    print(f"activations: {len(journal)}; transfers: {sum(len(r.transfers) for r in journal)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
