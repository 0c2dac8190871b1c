"""Wire framing of adapter messages."""

from __future__ import annotations

import pytest

from chainweave.errors import ProtocolError
from chainweave.protocol import (
    AdapterMessage,
    MessageCounter,
    adapter_timeout_ms,
    decode_message,
    encode_message,
)


def test_encode_decode_roundtrip():
    msg = AdapterMessage(id=7, kind="load-data", payload={"channel": "in", "x": [1, 2]})
    raw = encode_message(msg)
    assert raw.endswith(b"\n")
    assert b"\n" not in raw[:-1]
    assert decode_message(raw) == msg


def test_encode_escapes_newlines_in_strings():
    msg = AdapterMessage(id=1, kind="ack", payload={"re": 1, "text": "two\nlines"})
    raw = encode_message(msg)
    assert raw.count(b"\n") == 1  # only the terminator
    assert decode_message(raw).payload["text"] == "two\nlines"


@pytest.mark.parametrize(
    "line",
    [
        b"not json",
        b"[1,2,3]",
        b'{"id": "x", "kind": "ack", "payload": {}}',
        b'{"id": 1, "kind": "bogus", "payload": {}}',
        b'{"id": 1, "kind": "ack", "payload": 3}',
        b'{"kind": "ack", "payload": {}}',
        b"\xff\xfe",
    ],
)
def test_decode_rejects_malformed(line: bytes):
    with pytest.raises(ProtocolError):
        decode_message(line)


def test_reply_to_extraction():
    msg = decode_message(b'{"id": 4, "kind": "error", "payload": {"re": 2, "code": "x"}}')
    assert msg.reply_to() == 2
    msg = decode_message(b'{"id": 4, "kind": "event", "payload": {}}')
    assert msg.reply_to() is None


def test_counter_strictly_increasing():
    counter = MessageCounter()
    values = [counter.take() for _ in range(100)]
    assert values == list(range(1, 101))


def test_timeout_env_override(monkeypatch):
    monkeypatch.delenv("CHAINWEAVE_ADAPTER_TIMEOUT_MS", raising=False)
    assert adapter_timeout_ms() == 5000
    monkeypatch.setenv("CHAINWEAVE_ADAPTER_TIMEOUT_MS", "250")
    assert adapter_timeout_ms() == 250
    assert adapter_timeout_ms(100) == 100
    monkeypatch.setenv("CHAINWEAVE_ADAPTER_TIMEOUT_MS", "junk")
    assert adapter_timeout_ms() == 5000
