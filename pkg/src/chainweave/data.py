"""Data artifacts and the declarative transforms applied along data-flow links.

Payloads are either tabular or opaque blobs. Number cells are carried as
decimal text so that serialization round-trips are exact; comparisons parse
them with :class:`decimal.Decimal`.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import uuid
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

from .errors import (
    DocumentSyntaxError,
    TypeMismatch,
    UnknownColumn,
    ValidationReport,
)

COLUMN_TYPES = ("text", "number", "boolean")

COMPARATORS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class TabularData:
    """Typed column-oriented table; rows are tuples of cell values.

    Cell representation per column type: text -> str, number -> str holding
    a decimal literal, boolean -> bool.
    """

    columns: tuple[tuple[str, str], ...]
    rows: tuple[tuple, ...]

    def __post_init__(self):
        names = [n for n, _ in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique")
        for name, ctype in self.columns:
            if ctype not in COLUMN_TYPES:
                raise ValueError(f"column {name!r} has unknown type {ctype!r}")
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} cells, expected {width}")
            for (name, ctype), value in zip(self.columns, row):
                _check_cell(name, ctype, value, i)

    def column_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.columns):
            if n == name:
                return i
        raise UnknownColumn(f"unknown column {name!r}", subject=name)

    def column_names(self) -> list[str]:
        return [n for n, _ in self.columns]


def _check_cell(name: str, ctype: str, value: object, row: int) -> None:
    if ctype == "text":
        if not isinstance(value, str):
            raise ValueError(f"row {row}, column {name!r}: expected text, got {value!r}")
    elif ctype == "number":
        if not isinstance(value, str):
            raise ValueError(
                f"row {row}, column {name!r}: numbers are carried as decimal text, got {value!r}"
            )
        try:
            Decimal(value)
        except InvalidOperation as exc:
            raise ValueError(
                f"row {row}, column {name!r}: {value!r} is not a decimal literal"
            ) from exc
    elif ctype == "boolean":
        if not isinstance(value, bool):
            raise ValueError(f"row {row}, column {name!r}: expected boolean, got {value!r}")


@dataclass(frozen=True)
class BlobData:
    """Opaque payload with a media-type tag."""

    media_type: str
    data: bytes

    def __post_init__(self):
        if not self.media_type:
            raise ValueError("mediaType must be non-empty")


@dataclass(frozen=True)
class DataArtifact:
    """One identifiable piece of data flowing through the toolchain."""

    id: str
    payload: TabularData | BlobData
    origin_tool: str = "external"
    origin_seq: int | None = None


def fresh_artifact_id() -> str:
    return uuid.uuid4().hex[:12]


# --- transform steps ---------------------------------------------------------

@dataclass(frozen=True)
class SelectColumns:
    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise ValueError("SelectColumns requires at least one column name")


@dataclass(frozen=True)
class RenameColumn:
    src: str
    dst: str

    def __post_init__(self):
        if not self.src or not self.dst:
            raise ValueError("RenameColumn requires non-empty names")


@dataclass(frozen=True)
class FilterRows:
    column: str
    comparator: str
    literal: str

    def __post_init__(self):
        if self.comparator not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.comparator!r}")


@dataclass(frozen=True)
class ToDelimitedText:
    delimiter: str

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")


@dataclass(frozen=True)
class FromDelimitedText:
    delimiter: str
    typed_header: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")
        if not self.typed_header:
            raise ValueError("typed header must name at least one column")


TransformStep = SelectColumns | RenameColumn | FilterRows | ToDelimitedText | FromDelimitedText


@dataclass(frozen=True)
class TransformPipeline:
    """Ordered transform steps; an empty list is the identity pipeline."""

    id: str
    steps: tuple[TransformStep, ...] = ()


# --- applying pipelines -------------------------------------------------------

def apply_pipeline(
    pipeline: TransformPipeline,
    artifact: DataArtifact,
    *,
    new_id: str | None = None,
) -> DataArtifact:
    """Run every step over the artifact payload and return a fresh artifact.

    The input artifact is left untouched; origin metadata is preserved.
    Raises TypeMismatch (naming the step index) when a step cannot consume
    the running payload type, and UnknownColumn for bad column references.
    """
    payload: TabularData | BlobData = artifact.payload
    for index, step in enumerate(pipeline.steps):
        payload = _apply_step(step, payload, index)
    return DataArtifact(
        id=new_id if new_id is not None else fresh_artifact_id(),
        payload=payload,
        origin_tool=artifact.origin_tool,
        origin_seq=artifact.origin_seq,
    )


def _apply_step(step: TransformStep, payload: TabularData | BlobData, index: int):
    if isinstance(step, (SelectColumns, RenameColumn, FilterRows, ToDelimitedText)):
        if not isinstance(payload, TabularData):
            raise TypeMismatch(
                f"step {index} ({type(step).__name__}) requires a tabular payload",
                subject=str(index),
            )
    if isinstance(step, FromDelimitedText) and not isinstance(payload, BlobData):
        raise TypeMismatch(
            f"step {index} (FromDelimitedText) requires a text blob payload",
            subject=str(index),
        )

    if isinstance(step, SelectColumns):
        indices = [payload.column_index(n) for n in step.names]
        return TabularData(
            columns=tuple(payload.columns[i] for i in indices),
            rows=tuple(tuple(row[i] for i in indices) for row in payload.rows),
        )

    if isinstance(step, RenameColumn):
        payload.column_index(step.src)  # raises UnknownColumn
        return TabularData(
            columns=tuple(
                (step.dst if name == step.src else name, ctype)
                for name, ctype in payload.columns
            ),
            rows=payload.rows,
        )

    if isinstance(step, FilterRows):
        col = payload.column_index(step.column)
        ctype = payload.columns[col][1]
        keep = [row for row in payload.rows if _compare(row[col], ctype, step.comparator, step.literal)]
        return TabularData(columns=payload.columns, rows=tuple(keep))

    if isinstance(step, ToDelimitedText):
        return BlobData(media_type="text/plain", data=_to_delimited(payload, step.delimiter))

    if isinstance(step, FromDelimitedText):
        return _from_delimited(payload, step.delimiter, step.typed_header)

    raise TypeMismatch(f"step {index} has unknown kind {type(step).__name__}", subject=str(index))


def _compare(cell, ctype: str, comparator: str, literal: str) -> bool:
    if ctype == "number":
        left: object = Decimal(cell)
        try:
            right: object = Decimal(literal)
        except InvalidOperation as exc:
            raise TypeMismatch(f"literal {literal!r} is not numeric") from exc
    elif ctype == "boolean":
        left = cell
        right = literal.lower() == "true"
        if comparator not in ("=", "!="):
            raise TypeMismatch(f"comparator {comparator!r} not valid for boolean column")
    else:
        left, right = cell, literal
    if comparator == "=":
        return left == right
    if comparator == "!=":
        return left != right
    if ctype == "boolean":  # ordered comparators rejected above
        raise TypeMismatch(f"comparator {comparator!r} not valid for boolean column")
    if comparator == "<":
        return left < right
    if comparator == "<=":
        return left <= right
    if comparator == ">":
        return left > right
    return left >= right


def _cell_to_text(cell, ctype: str) -> str:
    if ctype == "boolean":
        return "true" if cell else "false"
    return cell


def _to_delimited(table: TabularData, delimiter: str) -> bytes:
    # RFC-4180-style quoting: values containing the delimiter or quotes are
    # wrapped in double quotes with embedded quotes doubled.
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, quotechar='"', lineterminator="\n")
    writer.writerow(table.column_names())
    for row in table.rows:
        writer.writerow([_cell_to_text(c, t) for c, (_, t) in zip(row, table.columns)])
    return buf.getvalue().encode("utf-8")


def _from_delimited(
    blob: BlobData, delimiter: str, typed_header: tuple[tuple[str, str], ...]
) -> TabularData:
    text = blob.data.decode("utf-8")
    reader = csv.reader(io.StringIO(text), delimiter=delimiter, quotechar='"')
    try:
        header = next(reader)
    except StopIteration:
        raise TypeMismatch("delimited text payload is empty") from None
    expected = [n for n, _ in typed_header]
    if header != expected:
        raise UnknownColumn(
            f"header {header!r} does not match typed header {expected!r}",
            subject=",".join(header),
        )
    rows = []
    for raw in reader:
        if not raw:
            continue
        cells = []
        for value, (_, ctype) in zip(raw, typed_header):
            cells.append(value.lower() == "true" if ctype == "boolean" else value)
        rows.append(tuple(cells))
    return TabularData(columns=tuple(typed_header), rows=tuple(rows))


# --- static pipeline checking --------------------------------------------------

#: Abstract payload shapes used by validate_pipeline. A tabular shape carries
#: its known schema (or None when unknown); blobs carry no schema.
_TABULAR, _BLOB = "tabular", "blob"


def validate_pipeline(
    pipeline: TransformPipeline,
    input_format: str,
    schema: tuple[tuple[str, str], ...] | None = None,
) -> ValidationReport:
    """Simulate payload-type flow through the steps without data.

    input_format is "tabular" or "blob"; schema optionally gives the input
    columns so column references can be checked.
    """
    report = ValidationReport()
    shape = input_format
    cols = dict(schema) if schema is not None else None
    for index, step in enumerate(pipeline.steps):
        where = f"step {index}"
        if isinstance(step, (SelectColumns, RenameColumn, FilterRows, ToDelimitedText)):
            if shape != _TABULAR:
                report.add("TYPE_MISMATCH", str(index), f"{where}: requires tabular payload")
                return report
        if isinstance(step, FromDelimitedText) and shape != _BLOB:
            report.add("TYPE_MISMATCH", str(index), f"{where}: requires blob payload")
            return report

        if isinstance(step, SelectColumns):
            if cols is not None:
                unknown = [n for n in step.names if n not in cols]
                for n in unknown:
                    report.add("UNKNOWN_COLUMN", n, f"{where}: unknown column {n!r}")
                if unknown:
                    return report
                cols = {n: cols[n] for n in step.names}
        elif isinstance(step, RenameColumn):
            if cols is not None:
                if step.src not in cols:
                    report.add("UNKNOWN_COLUMN", step.src, f"{where}: unknown column {step.src!r}")
                    return report
                cols = {step.dst if n == step.src else n: t for n, t in cols.items()}
        elif isinstance(step, FilterRows):
            if cols is not None and step.column not in cols:
                report.add("UNKNOWN_COLUMN", step.column, f"{where}: unknown column {step.column!r}")
                return report
        elif isinstance(step, ToDelimitedText):
            shape, cols = _BLOB, None
        elif isinstance(step, FromDelimitedText):
            shape, cols = _TABULAR, dict(step.typed_header)
    return report


# --- serialization --------------------------------------------------------------

def payload_to_obj(payload: TabularData | BlobData) -> dict:
    if isinstance(payload, TabularData):
        return {
            "type": "tabular",
            "columns": [[n, t] for n, t in payload.columns],
            "rows": [list(r) for r in payload.rows],
        }
    import base64

    return {
        "type": "blob",
        "mediaType": payload.media_type,
        "base64": base64.b64encode(payload.data).decode("ascii"),
    }


def payload_from_obj(raw: dict) -> TabularData | BlobData:
    kind = raw.get("type")
    if kind == "tabular":
        return TabularData(
            columns=tuple((str(n), str(t)) for n, t in raw["columns"]),
            rows=tuple(tuple(c for c in r) for r in raw["rows"]),
        )
    if kind == "blob":
        import base64

        return BlobData(media_type=str(raw["mediaType"]), data=base64.b64decode(raw["base64"]))
    raise DocumentSyntaxError(f"unknown payload type {kind!r}")


def artifact_to_obj(artifact: DataArtifact) -> dict:
    obj = {
        "id": artifact.id,
        "payload": payload_to_obj(artifact.payload),
        "origin": {"tool": artifact.origin_tool},
    }
    if artifact.origin_seq is not None:
        obj["origin"]["seq"] = artifact.origin_seq
    return obj


def artifact_from_obj(raw: dict) -> DataArtifact:
    try:
        origin = raw.get("origin") or {}
        return DataArtifact(
            id=str(raw["id"]),
            payload=payload_from_obj(raw["payload"]),
            origin_tool=str(origin.get("tool", "external")),
            origin_seq=origin.get("seq"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentSyntaxError(f"malformed artifact object: {exc}") from exc


def payload_hash(payload: TabularData | BlobData) -> str:
    """Stable content hash used by replay comparison."""
    if isinstance(payload, BlobData):
        h = hashlib.sha256()
        h.update(payload.media_type.encode("utf-8"))
        h.update(b"\0")
        h.update(payload.data)
        return h.hexdigest()
    canonical = json.dumps(payload_to_obj(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def payload_format(payload: TabularData | BlobData) -> str:
    return _TABULAR if isinstance(payload, TabularData) else _BLOB


# --- pipeline serialization ------------------------------------------------------

_STEP_OPS = {
    "select-columns": SelectColumns,
    "rename-column": RenameColumn,
    "filter-rows": FilterRows,
    "to-delimited-text": ToDelimitedText,
    "from-delimited-text": FromDelimitedText,
}


def step_to_obj(step: TransformStep) -> dict:
    if isinstance(step, SelectColumns):
        return {"op": "select-columns", "names": list(step.names)}
    if isinstance(step, RenameColumn):
        return {"op": "rename-column", "from": step.src, "to": step.dst}
    if isinstance(step, FilterRows):
        return {
            "op": "filter-rows",
            "column": step.column,
            "comparator": step.comparator,
            "value": step.literal,
        }
    if isinstance(step, ToDelimitedText):
        return {"op": "to-delimited-text", "delimiter": step.delimiter}
    return {
        "op": "from-delimited-text",
        "delimiter": step.delimiter,
        "header": [[n, t] for n, t in step.typed_header],
    }


def step_from_obj(raw: dict) -> TransformStep:
    op = raw.get("op")
    try:
        if op == "select-columns":
            return SelectColumns(names=tuple(raw["names"]))
        if op == "rename-column":
            return RenameColumn(src=raw["from"], dst=raw["to"])
        if op == "filter-rows":
            return FilterRows(column=raw["column"], comparator=raw["comparator"], literal=raw["value"])
        if op == "to-delimited-text":
            return ToDelimitedText(delimiter=raw["delimiter"])
        if op == "from-delimited-text":
            return FromDelimitedText(
                delimiter=raw["delimiter"],
                typed_header=tuple((str(n), str(t)) for n, t in raw["header"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentSyntaxError(f"malformed transform step {op!r}: {exc}") from exc
    raise DocumentSyntaxError(f"unknown transform op {op!r}")


def pipeline_to_obj(pipeline: TransformPipeline) -> dict:
    return {"id": pipeline.id, "steps": [step_to_obj(s) for s in pipeline.steps]}


def pipeline_from_obj(raw: dict) -> TransformPipeline:
    try:
        return TransformPipeline(
            id=str(raw["id"]),
            steps=tuple(step_from_obj(s) for s in raw.get("steps", [])),
        )
    except (KeyError, TypeError) as exc:
        raise DocumentSyntaxError(f"malformed pipeline object: {exc}") from exc
