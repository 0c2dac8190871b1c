"""Adapter wire protocol: newline-delimited JSON over stdin/stdout.

Each line is one UTF-8 JSON object ``{"id": int, "kind": str, "payload":
object}`` with no embedded newlines. Senders number their messages with a
strictly increasing counter; ack/error replies reference the request they
answer via ``payload["re"]``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .errors import ProtocolError

REQUEST_KINDS = ("activate", "deactivate", "load-data", "export-data", "set-geometry", "snapshot")
REPLY_KINDS = ("ack", "error")
ALL_KINDS = REQUEST_KINDS + REPLY_KINDS + ("event",)

DEFAULT_TIMEOUT_MS = 5000
TIMEOUT_ENV_VAR = "CHAINWEAVE_ADAPTER_TIMEOUT_MS"


def adapter_timeout_ms(override: int | None = None) -> int:
    """Configured request timeout; override > env var > default."""
    if override is not None:
        return override
    raw = os.environ.get(TIMEOUT_ENV_VAR)
    if raw:
        try:
            return int(raw)
        except ValueError:
            pass
    return DEFAULT_TIMEOUT_MS


@dataclass(frozen=True)
class AdapterMessage:
    id: int
    kind: str
    payload: dict

    def reply_to(self) -> int | None:
        value = self.payload.get("re")
        return value if isinstance(value, int) else None


def encode_message(msg: AdapterMessage) -> bytes:
    line = json.dumps(
        {"id": msg.id, "kind": msg.kind, "payload": msg.payload},
        ensure_ascii=True,
        separators=(",", ":"),
    )
    if "\n" in line:  # ensure_ascii escapes everything, but keep the guarantee explicit
        raise ProtocolError("encoded message contains a newline")
    return line.encode("utf-8") + b"\n"


def decode_message(line: bytes | str) -> AdapterMessage:
    """Parse one protocol line; raises ProtocolError on any malformation."""
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"message is not valid UTF-8: {exc}") from exc
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"message is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ProtocolError("message must be a JSON object")
    msg_id = raw.get("id")
    kind = raw.get("kind")
    payload = raw.get("payload")
    if not isinstance(msg_id, int) or isinstance(msg_id, bool):
        raise ProtocolError(f"message id must be an integer, got {msg_id!r}")
    if kind not in ALL_KINDS:
        raise ProtocolError(f"unknown message kind {kind!r}")
    if not isinstance(payload, dict):
        raise ProtocolError("message payload must be an object")
    return AdapterMessage(id=msg_id, kind=kind, payload=payload)


class MessageCounter:
    """Strictly increasing per-connection message ids, starting at 1."""

    def __init__(self):
        self._next = 1

    def take(self) -> int:
        value = self._next
        self._next += 1
        return value
