"""
A full session: step entry, automatic handoff, provenance
=========================================================

Walks the nine-step study workflow against the mock tool fleet. Entering
a step activates its toolset, runs the data-flow links, arranges the
views, and appends an activation record; the analysis steps are revisited
back and forth, each visit getting its own record.
"""

from pathlib import Path

from chainweave import ExecutionEngine, SubprocessToolHost, load_project, replay
from chainweave.journal import transfer_log
from chainweave.project import load_input_artifacts

SCENARIO = Path(__file__).parent.parent / "fixtures" / "scenario"

project = load_project(SCENARIO / "project.json")
inputs = load_input_artifacts(project, SCENARIO / "project.json")

host = SubprocessToolHost(list(project.graph.tools), base_dir=SCENARIO)
engine = ExecutionEngine(project.workflow, project.graph, host)
engine.start_session(inputs)

walk = ["s1", "s2", "s3", "s4", "s5", "s6", "s7", "s6", "s7", "s8", "s9"]
try:
    for step_id in walk:
        record = engine.enter_step(step_id)
        links = ", ".join(t.link_id for t in record.transfers) or "none"
        print(f"seq {record.seq:2}  {step_id}  active={sorted(host.active_tool_ids())}")
        print(f"        transfers: {links}")
    engine.add_note("outlier removed after second thickness pass")
    capture = engine.add_capture("final chart", tool_id="t_charts")
    print("captured:", capture.label, "->", capture.image_ref)
finally:
    journal = engine.session.journal
    host.shutdown()

revisits = {}
for record in journal:
    revisits.setdefault(record.step_id, []).append(record.seq)
print("\nvisits per step:", {k: v for k, v in revisits.items() if len(v) > 1})

# The same walk replayed against fresh tool processes produces the exact
# same transfer log — the journal is a faithful, replayable history.
fresh_host = SubprocessToolHost(list(project.graph.tools), base_dir=SCENARIO)
replayed = replay(project.workflow, project.graph, inputs, journal, fresh_host)
print("replay transfer log identical:", transfer_log(replayed) == transfer_log(journal))
