"""Tool process lifecycle and adapter-protocol client.

One connection handler per tool instance; request/response per tool is
strictly serialized (one outstanding request at a time). Transcripts of all
traffic are recorded for conformance checks.
"""

from __future__ import annotations

import logging
import queue
import subprocess
import sys
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .data import BlobData, DataArtifact, artifact_from_obj, artifact_to_obj, payload_format
from .errors import (
    AlreadyActive,
    Finding,
    FormatMismatch,
    HandshakeTimeout,
    LaunchFailed,
    NotActive,
    ProtocolError,
    SourceUnavailable,
    UnknownChannel,
    UnknownTool,
)
from .graph import ToolDescriptor
from .layout import Region
from .protocol import AdapterMessage, MessageCounter, adapter_timeout_ms, decode_message, encode_message

log = logging.getLogger(__name__)

INACTIVE = "inactive"
LAUNCHING = "launching"
ACTIVE = "active"
FAILED = "failed"

#: Error codes a tool may reply with, mapped onto host-side exceptions.
_ERROR_CODE_MAP = {
    "unavailable": SourceUnavailable,
    "unknown-channel": UnknownChannel,
    "format-mismatch": FormatMismatch,
}


@dataclass
class ToolInstance:
    tool_id: str
    state: str = INACTIVE
    last_error: str | None = None


class _Connection:
    """Pipes to one tool process plus a background reader thread."""

    def __init__(self, process: subprocess.Popen):
        self.process = process
        self.counter = MessageCounter()
        self.lock = threading.Lock()
        self.inbox: queue.Queue = queue.Queue()
        self.events: list[AdapterMessage] = []
        self.transcript: list[dict] = []
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        assert self.process.stdout is not None
        for line in self.process.stdout:
            try:
                msg = decode_message(line)
            except ProtocolError as exc:
                self.inbox.put(("malformed", str(exc), line))
                continue
            self.inbox.put(("msg", msg, line))
        self.inbox.put(("eof", None, b""))

    def send(self, kind: str, payload: dict) -> AdapterMessage:
        msg = AdapterMessage(id=self.counter.take(), kind=kind, payload=payload)
        raw = encode_message(msg)
        self.transcript.append({"dir": "sent", "id": msg.id, "kind": kind, "payload": payload})
        assert self.process.stdin is not None
        self.process.stdin.write(raw)
        self.process.stdin.flush()
        return msg

    def request(self, kind: str, payload: dict, timeout_ms: int) -> AdapterMessage:
        """Send one request and block for its ack/error within the timeout."""
        with self.lock:
            try:
                sent = self.send(kind, payload)
            except (BrokenPipeError, OSError) as exc:
                raise ProtocolError(f"connection to tool lost: {exc}") from exc
            deadline = time.monotonic() + timeout_ms / 1000.0
            while True:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError(f"no reply to {kind!r} within {timeout_ms} ms")
                try:
                    tag, value, raw = self.inbox.get(timeout=remaining)
                except queue.Empty:
                    raise TimeoutError(f"no reply to {kind!r} within {timeout_ms} ms") from None
                if tag == "malformed":
                    self.transcript.append({"dir": "received", "malformed": True, "raw": repr(raw)})
                    raise ProtocolError(f"malformed reply: {value}")
                if tag == "eof":
                    raise ProtocolError("tool closed its output stream")
                msg: AdapterMessage = value
                self.transcript.append(
                    {"dir": "received", "id": msg.id, "kind": msg.kind, "payload": msg.payload}
                )
                if msg.kind == "event":
                    self.events.append(msg)
                    continue
                if msg.kind in ("ack", "error") and msg.reply_to() == sent.id:
                    return msg
                raise ProtocolError(
                    f"unexpected {msg.kind!r} reply (answers {msg.reply_to()!r}, expected {sent.id})"
                )

    def close(self) -> None:
        try:
            if self.process.stdin:
                self.process.stdin.close()
        except OSError:
            pass


class SubprocessToolHost:
    """Launches tool processes per their descriptors and speaks the protocol."""

    def __init__(
        self,
        tools: list[ToolDescriptor] | tuple[ToolDescriptor, ...],
        base_dir: str | Path | None = None,
        timeout_ms: int | None = None,
    ):
        self._descriptors = {t.id: t for t in tools}
        self.base_dir = (Path(base_dir) if base_dir is not None else Path.cwd()).resolve()
        self.timeout_ms = adapter_timeout_ms(timeout_ms)
        self._instances: dict[str, ToolInstance] = {
            t.id: ToolInstance(tool_id=t.id) for t in tools
        }
        self._connections: dict[str, _Connection] = {}
        self.findings: list[Finding] = []

    # --- descriptor / state helpers -----------------------------------------

    def descriptor(self, tool_id: str) -> ToolDescriptor:
        try:
            return self._descriptors[tool_id]
        except KeyError:
            raise UnknownTool(f"unknown tool {tool_id!r}", subject=tool_id) from None

    def instance(self, tool_id: str) -> ToolInstance:
        self.descriptor(tool_id)
        return self._instances[tool_id]

    def state(self, tool_id: str) -> str:
        return self.instance(tool_id).state

    def active_tool_ids(self) -> set[str]:
        return {tid for tid, inst in self._instances.items() if inst.state == ACTIVE}

    def transcript(self, tool_id: str) -> list[dict]:
        conn = self._connections.get(tool_id)
        return list(conn.transcript) if conn else []

    def _command(self, launch_command: tuple[str, ...]) -> list[str]:
        return [
            arg.replace("{python}", sys.executable).replace("{base}", str(self.base_dir))
            for arg in launch_command
        ]

    def _require_active(self, tool_id: str) -> _Connection:
        inst = self.instance(tool_id)
        if inst.state != ACTIVE:
            raise NotActive(f"tool {tool_id!r} is not active (state {inst.state})", subject=tool_id)
        return self._connections[tool_id]

    # --- lifecycle ------------------------------------------------------------

    def activate(self, tool_id: str) -> ToolInstance:
        """Spawn the tool process and complete the activate handshake."""
        descriptor = self.descriptor(tool_id)
        inst = self._instances[tool_id]
        if inst.state in (ACTIVE, LAUNCHING):
            raise AlreadyActive(f"tool {tool_id!r} is already active", subject=tool_id)
        if inst.state == FAILED:
            raise LaunchFailed(f"tool {tool_id!r} previously failed: {inst.last_error}", subject=tool_id)
        inst.state = LAUNCHING
        try:
            process = subprocess.Popen(
                self._command(descriptor.launch.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                cwd=str(self.base_dir),
            )
        except OSError as exc:
            inst.state = FAILED
            inst.last_error = str(exc)
            raise LaunchFailed(f"cannot launch tool {tool_id!r}: {exc}", subject=tool_id) from exc
        conn = _Connection(process)
        self._connections[tool_id] = conn
        try:
            reply = conn.request("activate", {"tool": tool_id}, self.timeout_ms)
        except TimeoutError as exc:
            self._kill(tool_id)
            inst.state = FAILED
            inst.last_error = "handshake timeout"
            raise HandshakeTimeout(f"tool {tool_id!r} did not ack activation", subject=tool_id) from exc
        except ProtocolError as exc:
            self._kill(tool_id)
            inst.state = FAILED
            inst.last_error = str(exc)
            raise
        if reply.kind == "error":
            self._kill(tool_id)
            inst.state = FAILED
            inst.last_error = str(reply.payload.get("code"))
            raise LaunchFailed(
                f"tool {tool_id!r} refused activation: {reply.payload.get('code')}", subject=tool_id
            )
        inst.state = ACTIVE
        inst.last_error = None
        return inst

    def deactivate(self, tool_id: str) -> ToolInstance:
        """Politely stop the tool; escalates to a forced kill on timeout."""
        inst = self.instance(tool_id)
        if inst.state != ACTIVE:
            raise NotActive(f"tool {tool_id!r} is not active", subject=tool_id)
        conn = self._connections[tool_id]
        forced = False
        try:
            conn.request("deactivate", {"tool": tool_id}, self.timeout_ms)
        except (TimeoutError, ProtocolError):
            forced = True
        conn.close()
        try:
            conn.process.wait(timeout=self.timeout_ms / 1000.0)
        except subprocess.TimeoutExpired:
            forced = True
            self._kill(tool_id)
        if forced:
            finding = Finding(
                "FORCED_TERMINATION", tool_id, f"tool {tool_id!r} ignored deactivate; killed"
            )
            self.findings.append(finding)
            log.warning("%s", finding.message)
        inst.state = INACTIVE
        return inst

    def _kill(self, tool_id: str) -> None:
        conn = self._connections.get(tool_id)
        if conn is None:
            return
        conn.close()
        if conn.process.poll() is None:
            conn.process.kill()
            try:
                conn.process.wait(timeout=5)
            except subprocess.TimeoutExpired:
                pass

    def shutdown(self) -> None:
        """Force-stop everything; used at session teardown."""
        for tool_id, inst in self._instances.items():
            if inst.state == ACTIVE:
                try:
                    self.deactivate(tool_id)
                except Exception:
                    self._kill(tool_id)
                    inst.state = INACTIVE

    # --- data and view plumbing --------------------------------------------------

    def load_data(self, tool_id: str, channel: str, artifact: DataArtifact) -> None:
        descriptor = self.descriptor(tool_id)
        conn = self._require_active(tool_id)
        accepted = descriptor.input_format(channel)
        if accepted is None:
            raise UnknownChannel(f"tool {tool_id!r} has no input channel {channel!r}", subject=channel)
        actual = payload_format(artifact.payload)
        if accepted != actual:
            raise FormatMismatch(
                f"channel {channel!r} accepts {accepted!r}, artifact is {actual!r}", subject=channel
            )
        reply = self._request_checked(conn, "load-data", {"channel": channel, "artifact": artifact_to_obj(artifact)})
        if reply.kind == "error":
            raise self._error_from_reply(reply, f"load into {tool_id}:{channel}")

    def export_data(self, tool_id: str, channel: str, origin_seq: int | None = None) -> DataArtifact:
        descriptor = self.descriptor(tool_id)
        conn = self._require_active(tool_id)
        if descriptor.output_format(channel) is None:
            raise UnknownChannel(f"tool {tool_id!r} has no output channel {channel!r}", subject=channel)
        reply = self._request_checked(conn, "export-data", {"channel": channel})
        if reply.kind == "error":
            raise self._error_from_reply(reply, f"export from {tool_id}:{channel}")
        raw = reply.payload.get("artifact")
        if not isinstance(raw, dict):
            raise ProtocolError(f"export reply from {tool_id!r} carries no artifact")
        try:
            parsed = artifact_from_obj(raw)
        except Exception as exc:
            raise ProtocolError(f"export reply from {tool_id!r} is malformed: {exc}") from exc
        from .data import fresh_artifact_id

        return DataArtifact(
            id=fresh_artifact_id(),
            payload=parsed.payload,
            origin_tool=tool_id,
            origin_seq=origin_seq,
        )

    def set_geometry(self, tool_id: str, region: Region, screen: tuple[int, int]) -> dict:
        conn = self._require_active(tool_id)
        x, y, w, h = region.to_pixels(screen[0], screen[1])
        reply = self._request_checked(
            conn, "set-geometry", {"x": x, "y": y, "width": w, "height": h}
        )
        if reply.kind == "error":
            raise self._error_from_reply(reply, f"set-geometry on {tool_id}")
        return reply.payload

    def snapshot(self, tool_id: str) -> BlobData:
        conn = self._require_active(tool_id)
        reply = self._request_checked(conn, "snapshot", {})
        if reply.kind == "error":
            raise ProtocolError(
                f"tool {tool_id!r} refused snapshot: {reply.payload.get('code')}", subject=tool_id
            )
        blob = reply.payload.get("blob")
        if not isinstance(blob, dict) or "base64" not in blob or "mediaType" not in blob:
            raise ProtocolError(f"snapshot reply from {tool_id!r} carries no image blob")
        import base64

        try:
            data = base64.b64decode(blob["base64"], validate=True)
        except Exception as exc:
            raise ProtocolError(f"snapshot blob from {tool_id!r} is not valid base64") from exc
        return BlobData(media_type=str(blob["mediaType"]), data=data)

    def _request_checked(self, conn: _Connection, kind: str, payload: dict) -> AdapterMessage:
        try:
            return conn.request(kind, payload, self.timeout_ms)
        except TimeoutError as exc:
            raise ProtocolError(f"no reply to {kind!r} within {self.timeout_ms} ms") from exc

    @staticmethod
    def _error_from_reply(reply: AdapterMessage, context: str) -> Exception:
        code = str(reply.payload.get("code", "error"))
        message = str(reply.payload.get("message", ""))
        exc_type = _ERROR_CODE_MAP.get(code, ProtocolError)
        return exc_type(f"{context}: tool replied {code!r} {message}".rstrip(), subject=code)
