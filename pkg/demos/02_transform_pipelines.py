"""
Declarative data transforms between tools
=========================================

The cohort file is plain delimited text; pipelines parse it, cut it down
to the patient group, and project the columns a downstream tool expects.
"""

from pathlib import Path

from chainweave import (
    BlobData,
    DataArtifact,
    FilterRows,
    FromDelimitedText,
    SelectColumns,
    ToDelimitedText,
    TransformPipeline,
    apply_pipeline,
    validate_pipeline,
)

SCENARIO = Path(__file__).parent.parent / "fixtures" / "scenario"

csv_bytes = (SCENARIO / "cohort.csv").read_bytes()
raw = DataArtifact(id="raw", payload=BlobData("text/csv", csv_bytes))

header = (("id", "text"), ("group", "text"), ("age", "number"), ("bmi", "number"))
parse = TransformPipeline(id="parse", steps=(FromDelimitedText(",", header),))
cohort = apply_pipeline(parse, raw)
print("cohort rows:", len(cohort.payload.rows))

patients = apply_pipeline(
    TransformPipeline(id="patients", steps=(FilterRows("group", "=", "patient"),)),
    cohort,
)
controls = apply_pipeline(
    TransformPipeline(id="controls", steps=(FilterRows("group", "=", "control"),)),
    cohort,
)
print("patients:", len(patients.payload.rows), " controls:", len(controls.payload.rows))

# Pipelines can be statically checked against a schema before anything runs.
slim = TransformPipeline(
    id="slim", steps=(SelectColumns(("age", "bmi")), ToDelimitedText(";"))
)
report = validate_pipeline(slim, "tabular", header)
print("slim pipeline findings:", report.findings)

# A bad pipeline is caught without touching data.
broken = TransformPipeline(
    id="broken", steps=(ToDelimitedText(";"), SelectColumns(("age",)))
)
print("broken pipeline findings:", validate_pipeline(broken, "tabular", header).findings)

out = apply_pipeline(slim, patients)
print("\nfirst lines handed to the next tool:")
print("\n".join(out.payload.data.decode().splitlines()[:4]))
