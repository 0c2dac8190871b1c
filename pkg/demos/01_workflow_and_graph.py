"""
Workflow flowcharts and coordination graphs
===========================================

Loads the committed retina-study project, walks its step structure, and
shows what the coordination graph knows: which tools each step needs and
which tool-to-tool links the transitions require.
"""

from pathlib import Path

from chainweave import (
    derive_required_links,
    load_project,
    predecessors,
    successors,
    toolset_for_step,
    validate_graph,
    validate_workflow,
)

SCENARIO = Path(__file__).parent.parent / "fixtures" / "scenario"

project = load_project(SCENARIO / "project.json")
spec, graph = project.workflow, project.graph

# The workflow: nine steps across the three study stages.
print("workflow steps:")
for step in spec.steps:
    print(f"  {step.id}  [{step.stage.value:13}]  {step.name}")

# Both validators must come back empty before a session may start.
print("workflow findings:", validate_workflow(spec).findings)
print("graph findings:   ", validate_graph(spec, graph).findings)

# Neighborhood queries drive the detail view's previous/next navigation.
print("\naround s7:", [s.id for s in predecessors(spec, "s7")], "->", "s7", "->",
      [s.id for s in successors(spec, "s7")])

# Each step is bound to a toolset; two steps may share one.
for sid in ("s4", "s5", "s6"):
    ts = toolset_for_step(graph, sid)
    print(f"{sid} uses toolset {ts.id}: {sorted(ts.member_tool_ids)}")

# Every toolset boundary along a transition demands a link.
required = derive_required_links(spec, graph)
print(f"\n{len(required)} required tool pairs, all covered by links:")
for a, b in sorted(required):
    print(f"  {a} -> {b}")
