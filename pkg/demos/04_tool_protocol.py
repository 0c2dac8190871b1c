"""
Talking to tools over the adapter protocol
==========================================

Each tool is a separate process speaking newline-delimited JSON on
stdin/stdout. This drives one of the scenario's mock tools directly:
activation handshake, data in and out, window geometry, and a snapshot.
"""

from pathlib import Path

from chainweave import Region, SubprocessToolHost, load_project
from chainweave.project import read_artifact

SCENARIO = Path(__file__).parent.parent / "fixtures" / "scenario"

project = load_project(SCENARIO / "project.json")
host = SubprocessToolHost(list(project.graph.tools), base_dir=SCENARIO)

instance = host.activate("t_sheet")
print("t_sheet state:", instance.state)

cohort = read_artifact(SCENARIO / "artifacts", "cohort")
host.load_data("t_sheet", "table-in", cohort)
echoed = host.export_data("t_sheet", "table-out")
print("echoed rows:", len(echoed.payload.rows), "origin:", echoed.origin_tool)

ack = host.set_geometry("t_sheet", Region(0.0, 0.0, 0.5, 1.0), (1920, 1080))
print("tool placed at:", ack["applied"])

snap = host.snapshot("t_sheet")
print("snapshot:", snap.media_type, len(snap.data), "bytes")

host.deactivate("t_sheet")
print("t_sheet state:", host.state("t_sheet"))

print("\nwire transcript (request ids and their acks):")
for entry in host.transcript("t_sheet"):
    if entry["dir"] == "sent":
        print(f"  -> #{entry['id']} {entry['kind']}")
    else:
        answered = entry["payload"].get("re")
        print(f"  <- #{entry['id']} {entry['kind']} (answers #{answered})")
