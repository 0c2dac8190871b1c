"""
Composing captured results into one exportable figure
=====================================================

Reads the golden session journal, lists the captured intermediate results
grouped by activation, and assembles two captures into a single PNG with
a provenance manifest saying which step each part came from.
"""

from pathlib import Path

from chainweave import (
    Region,
    Session,
    SummaryComposition,
    export_composite,
    list_intermediate_results,
    place_capture,
)
from chainweave.journal import read_journal
from chainweave.project import read_artifact

SCENARIO = Path(__file__).parent.parent / "fixtures" / "scenario"
JOURNAL = SCENARIO / "golden" / "journal.jsonl"

journal = read_journal(JOURNAL)
session = Session(journal=journal)
artifacts_dir = JOURNAL.with_suffix(".jsonl.artifacts")
for record in journal:
    for capture in record.captures:
        session.data_store[capture.image_ref] = read_artifact(artifacts_dir, capture.image_ref)

print("captured intermediate results:")
for group in list_intermediate_results(session):
    labels = ", ".join(f"{c.id} '{c.label}'" for c in group.captures)
    print(f"  seq {group.seq} ({group.step_id}): {labels}")

composition = SummaryComposition(id="demo-summary", canvas=(512, 384), title="Key findings")
place_capture(composition, session, "c2", Region(0.0, 0.0, 0.6, 0.8))
place_capture(composition, session, "c3", Region(0.45, 0.3, 0.5, 0.6))
place_capture(composition, session, "c5", Region(0.05, 0.75, 0.3, 0.2))

blob, manifest = export_composite(composition, session)
out = Path(__file__).parent / "demo-summary.png"
out.write_bytes(blob.data)
print(f"\nwrote {out} ({len(blob.data)} bytes)")
print("manifest attributions:")
for placement in manifest["placements"]:
    print(f"  {placement['capture']} from step {placement['step']} (activation {placement['seq']})"
          f" at {placement['pixelRect']}")
