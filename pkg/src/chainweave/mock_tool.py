"""Scripted stand-in tool process for headless testing.

Run as ``python -m chainweave.mock_tool <script.json>``. The script file
describes canned responses and fault injections:

{
  "handshake":  "ack" | "ignore" | "error",
  "deactivate": "ack" | "ignore",
  "load":       "ack" | "error",
  "geometry":   "ack" | "ignore",
  "snapshot":   {"base64": "<png>"} | {"refuse": true} | {"malformed": true} | "ignore",
  "echo":       {"<output channel>": "<input channel>", ...},
  "exports":    {"<output channel>": {"artifact": {...}} | {"refuse": true}
                                      | {"malformed": true} | {"empty": true}}
}

Loaded artifacts are kept per input channel; ``echo`` maps an export
channel to the input channel whose last load it returns. stdout carries
protocol messages only; diagnostics go to stderr.
"""

from __future__ import annotations

import json
import sys

from .protocol import AdapterMessage, MessageCounter, decode_message, encode_message


def _write(raw: bytes) -> None:
    sys.stdout.buffer.write(raw)
    sys.stdout.buffer.flush()


def _send(counter: MessageCounter, kind: str, payload: dict) -> None:
    _write(encode_message(AdapterMessage(id=counter.take(), kind=kind, payload=payload)))


def _send_malformed() -> None:
    _write(b"this is not a protocol message\n")


class MockTool:
    def __init__(self, script: dict):
        self.script = script
        self.counter = MessageCounter()
        self.loaded: dict[str, dict] = {}
        self.geometry: dict | None = None

    def ack(self, request: AdapterMessage, **extra) -> None:
        _send(self.counter, "ack", {"re": request.id, **extra})

    def error(self, request: AdapterMessage, code: str, message: str = "") -> None:
        _send(self.counter, "error", {"re": request.id, "code": code, "message": message})

    def handle(self, request: AdapterMessage) -> bool:
        """Process one request; returns False when the process should exit."""
        kind = request.kind
        if kind == "activate":
            mode = self.script.get("handshake", "ack")
            if mode == "ack":
                self.ack(request)
            elif mode == "error":
                self.error(request, "activation-refused")
            # "ignore": no reply, let the host time out
            return True

        if kind == "deactivate":
            mode = self.script.get("deactivate", "ack")
            if mode == "ack":
                self.ack(request)
                return False
            return True  # ignore: keep running until killed

        if kind == "load-data":
            if self.script.get("load", "ack") == "error":
                self.error(request, "load-refused")
                return True
            channel = request.payload.get("channel")
            self.loaded[str(channel)] = request.payload.get("artifact") or {}
            self.ack(request)
            return True

        if kind == "export-data":
            self._export(request)
            return True

        if kind == "set-geometry":
            if self.script.get("geometry", "ack") == "ignore":
                return True
            self.geometry = {
                k: request.payload.get(k) for k in ("x", "y", "width", "height")
            }
            self.ack(request, applied=self.geometry)
            return True

        if kind == "snapshot":
            spec = self.script.get("snapshot")
            if spec == "ignore":
                return True
            if isinstance(spec, dict) and spec.get("malformed"):
                _send_malformed()
                return True
            if isinstance(spec, dict) and spec.get("refuse"):
                self.error(request, "snapshot-refused")
                return True
            if isinstance(spec, dict) and "base64" in spec:
                self.ack(request, blob={"mediaType": "image/png", "base64": spec["base64"]})
                return True
            self.error(request, "no-snapshot-scripted")
            return True

        self.error(request, "unsupported-kind", f"kind {kind!r} not handled")
        return True

    def _export(self, request: AdapterMessage) -> None:
        channel = str(request.payload.get("channel"))
        exports = self.script.get("exports", {})
        spec = exports.get(channel)
        if isinstance(spec, dict):
            if spec.get("malformed"):
                _send_malformed()
                return
            if spec.get("refuse"):
                self.error(request, "unavailable", f"channel {channel!r} refuses export")
                return
            if spec.get("empty"):
                self.ack(
                    request,
                    artifact={
                        "id": "empty",
                        "payload": {"type": "tabular", "columns": spec.get("columns", []), "rows": []},
                        "origin": {"tool": "mock"},
                    },
                )
                return
            if "artifact" in spec:
                self.ack(request, artifact=spec["artifact"])
                return
        echo = self.script.get("echo", {})
        source = echo.get(channel)
        if source is not None and source in self.loaded:
            self.ack(request, artifact=self.loaded[source])
            return
        self.error(request, "unavailable", f"nothing to export on channel {channel!r}")


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m chainweave.mock_tool <script.json>", file=sys.stderr)
        return 2
    with open(argv[0], encoding="utf-8") as fh:
        script = json.load(fh)
    tool = MockTool(script)
    for line in sys.stdin.buffer:
        try:
            request = decode_message(line)
        except Exception as exc:
            print(f"mock tool: dropping malformed input: {exc}", file=sys.stderr)
            continue
        if not tool.handle(request):
            break
    return 0


if __name__ == "__main__":
    sys.exit(main())
