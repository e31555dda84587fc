"""Length-delimited JSON message protocol for live UI clients.

Every message is a 4-byte big-endian payload length followed by a UTF-8
JSON object {"kind", "seq", "payload"}. Sequence numbers are strictly
increasing per direction starting at 1; each endpoint validates its
peer's stream independently.

The framing is deliberately boring: inspectable with any byte dump, and
bridgeable to a browser WebSocket by a few lines of relay code.
"""

from __future__ import annotations

import json
import struct
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

PROTOCOL_VERSION = 1
MAX_MESSAGE_BYTES = 1 << 20
_HEADER = struct.Struct(">I")


class ProtocolError(ValueError):
    """Framing, parse, or sequencing violation."""


class MessageKind(str, Enum):
    HELLO = "Hello"
    START_SESSION = "StartSession"
    STOP_SESSION = "StopSession"
    INPUT_FRAME = "InputFrame"
    GUIDANCE = "Guidance"
    STATE_UPDATE = "StateUpdate"
    EVENT = "Event"
    SUMMARY = "Summary"
    ERROR = "Error"


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    seq: int
    payload: dict = field(default_factory=dict)


def encode_message(msg: Message) -> bytes:
    body = json.dumps(
        {"kind": msg.kind.value, "seq": msg.seq, "payload": msg.payload},
        separators=(",", ":"),
        allow_nan=False,
    ).encode("utf-8")
    if len(body) > MAX_MESSAGE_BYTES:
        raise ProtocolError(f"message too large: {len(body)} bytes")
    return _HEADER.pack(len(body)) + body


def decode_body(body: bytes) -> Message:
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"invalid message body: {exc}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError("message body is not an object")
    try:
        kind = MessageKind(obj["kind"])
        seq = obj["seq"]
        payload = obj.get("payload", {})
    except (KeyError, ValueError) as exc:
        raise ProtocolError(f"bad message envelope: {exc}") from exc
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 1:
        raise ProtocolError(f"bad sequence number: {seq!r}")
    if not isinstance(payload, dict):
        raise ProtocolError("payload is not an object")
    return Message(kind, seq, payload)


class StreamDecoder:
    """Incremental frame decoder for a byte stream."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Message]:
        self._buf.extend(data)
        messages = []
        while True:
            if len(self._buf) < _HEADER.size:
                return messages
            (length,) = _HEADER.unpack_from(self._buf)
            if length > MAX_MESSAGE_BYTES:
                raise ProtocolError(f"declared length {length} exceeds limit")
            if len(self._buf) < _HEADER.size + length:
                return messages
            body = bytes(self._buf[_HEADER.size : _HEADER.size + length])
            del self._buf[: _HEADER.size + length]
            messages.append(decode_body(body))

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)


class SequenceValidator:
    """Enforces strictly increasing seq on one direction of a stream."""

    def __init__(self):
        self._last = 0

    def check(self, msg: Message) -> Message:
        if msg.seq <= self._last:
            raise ProtocolError(f"sequence went backwards: {msg.seq} after {self._last}")
        self._last = msg.seq
        return msg


class MessageWriter:
    """Assigns outgoing sequence numbers and encodes messages."""

    def __init__(self):
        self._next = 1

    def encode(self, kind: MessageKind, payload: dict | None = None) -> bytes:
        msg = Message(kind, self._next, payload or {})
        self._next += 1
        return encode_message(msg)


class MessageReader:
    """Blocking message reader over a socket-like object with recv()."""

    def __init__(self, sock, chunk: int = 65536):
        self._sock = sock
        self._chunk = chunk
        self._decoder = StreamDecoder()
        self._queue: deque[Message] = deque()

    def read(self) -> Message | None:
        """Next message, or None on clean disconnect."""
        while not self._queue:
            data = self._sock.recv(self._chunk)
            if not data:
                return None
            self._queue.extend(self._decoder.feed(data))
        return self._queue.popleft()
