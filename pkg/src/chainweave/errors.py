"""Error types and validation reports shared across the package.

Every error carries a machine-readable ``code`` so the service layer can
map failures onto wire responses without string matching.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ChainweaveError(Exception):
    """Base class for all package errors."""

    code = "ERROR"

    def __init__(self, message: str, *, subject: str | None = None):
        super().__init__(message)
        self.subject = subject


# --- parsing / validation ---------------------------------------------------

class DocumentSyntaxError(ChainweaveError):
    code = "SYNTAX_ERROR"


class DocumentValidationError(ChainweaveError):
    """Raised when a parsed document violates its invariants."""

    code = "VALIDATION_ERROR"

    def __init__(self, message: str, report: "ValidationReport | None" = None):
        super().__init__(message)
        self.report = report or ValidationReport()


class UnknownStep(ChainweaveError):
    code = "UNKNOWN_STEP"


class DanglingReference(ChainweaveError):
    code = "DANGLING_REFERENCE"


class DuplicateId(ChainweaveError):
    code = "DUPLICATE_ID"


class UnboundStep(ChainweaveError):
    code = "UNBOUND_STEP"


# --- data exchange ----------------------------------------------------------

class TypeMismatch(ChainweaveError):
    code = "TYPE_MISMATCH"


class UnknownColumn(ChainweaveError):
    code = "UNKNOWN_COLUMN"


class SourceUnavailable(ChainweaveError):
    code = "SOURCE_UNAVAILABLE"


class TransformFailed(ChainweaveError):
    code = "TRANSFORM_FAILED"


class DeliveryFailed(ChainweaveError):
    code = "DELIVERY_FAILED"


# --- layout -----------------------------------------------------------------

class ArityMismatch(ChainweaveError):
    code = "ARITY_MISMATCH"


class OverlapError(ChainweaveError):
    code = "OVERLAP"

    def __init__(self, message: str, pair: tuple[int, int]):
        super().__init__(message)
        self.pair = pair


class PermutationError(ChainweaveError):
    code = "PERMUTATION"


# --- tool host --------------------------------------------------------------

class LaunchFailed(ChainweaveError):
    code = "LAUNCH_FAILED"


class HandshakeTimeout(ChainweaveError):
    code = "HANDSHAKE_TIMEOUT"


class AlreadyActive(ChainweaveError):
    code = "ALREADY_ACTIVE"


class NotActive(ChainweaveError):
    code = "NOT_ACTIVE"


class UnknownTool(ChainweaveError):
    code = "UNKNOWN_TOOL"


class UnknownChannel(ChainweaveError):
    code = "UNKNOWN_CHANNEL"


class FormatMismatch(ChainweaveError):
    code = "FORMAT_MISMATCH"


class ProtocolError(ChainweaveError):
    code = "PROTOCOL_ERROR"


# --- execution engine -------------------------------------------------------

class InvalidSpec(ChainweaveError):
    code = "INVALID_SPEC"

    def __init__(self, message: str, report: "ValidationReport | None" = None):
        super().__init__(message)
        self.report = report or ValidationReport()


class InvalidGraph(ChainweaveError):
    code = "INVALID_GRAPH"

    def __init__(self, message: str, report: "ValidationReport | None" = None):
        super().__init__(message)
        self.report = report or ValidationReport()


class MissingDataSource(ChainweaveError):
    code = "MISSING_DATA_SOURCE"

    def __init__(self, message: str, missing: list[str]):
        super().__init__(message)
        self.missing = missing


class IllegalTransition(ChainweaveError):
    code = "ILLEGAL_TRANSITION"


class ActivationFailure(ChainweaveError):
    code = "ACTIVATION_FAILURE"


class UnknownSeq(ChainweaveError):
    code = "UNKNOWN_SEQ"


class NoActiveStep(ChainweaveError):
    code = "NO_ACTIVE_STEP"


class ReplayDivergence(ChainweaveError):
    code = "REPLAY_DIVERGENCE"

    def __init__(self, message: str, *, seq: int | None = None):
        super().__init__(message)
        self.seq = seq


# --- summary composition ----------------------------------------------------

class UnknownCapture(ChainweaveError):
    code = "UNKNOWN_CAPTURE"


class DeadCapture(ChainweaveError):
    code = "DEAD_CAPTURE"


class EmptyComposition(ChainweaveError):
    code = "EMPTY_COMPOSITION"


class MissingImage(ChainweaveError):
    code = "MISSING_IMAGE"


# --- service ----------------------------------------------------------------

class IOFailure(ChainweaveError):
    code = "IO_FAILURE"


class BindFailure(ChainweaveError):
    code = "BIND_FAILURE"


# --- findings ---------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Finding:
    """One machine-readable validation finding."""

    code: str
    subject: str
    message: str = ""


@dataclass(slots=True)
class ValidationReport:
    """Collected findings; empty means the validated object is sound."""

    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, code: str, subject: str, message: str = "") -> None:
        self.findings.append(Finding(code, subject, message))

    def codes(self) -> set[str]:
        return {f.code for f in self.findings}

    def subjects(self, code: str) -> list[str]:
        return [f.subject for f in self.findings if f.code == code]

    def to_json(self) -> list[dict]:
        return [
            {"code": f.code, "subject": f.subject, "message": f.message}
            for f in self.findings
        ]
