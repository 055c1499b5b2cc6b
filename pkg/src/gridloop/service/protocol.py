"""Length-prefixed JSON messages.

Each message is a 4-byte big-endian length followed by one UTF-8 JSON
object. The frame cap protects both ends from a corrupted length field.
"""

from __future__ import annotations

import json
import struct

PROTO_VERSION = 1
MAX_MESSAGE_BYTES = 1 << 20

_LENGTH = struct.Struct(">I")


class ProtocolError(Exception):
    pass


def encode_message(message: dict) -> bytes:
    body = json.dumps(message, separators=(",", ":"),
                      sort_keys=True).encode()
    if len(body) > MAX_MESSAGE_BYTES:
        raise ProtocolError(f"message of {len(body)} bytes exceeds cap")
    return _LENGTH.pack(len(body)) + body


class MessageDecoder:
    """Incremental decoder; feed bytes, collect complete messages."""

    def __init__(self) -> None:
        self._buffer = bytearray()

    def feed(self, data: bytes) -> list[dict]:
        self._buffer.extend(data)
        out: list[dict] = []
        while True:
            if len(self._buffer) < _LENGTH.size:
                return out
            (length,) = _LENGTH.unpack_from(self._buffer)
            if length > MAX_MESSAGE_BYTES:
                raise ProtocolError(f"declared length {length} exceeds cap")
            if len(self._buffer) < _LENGTH.size + length:
                return out
            body = bytes(self._buffer[_LENGTH.size:_LENGTH.size + length])
            del self._buffer[:_LENGTH.size + length]
            try:
                message = json.loads(body)
            except ValueError as exc:
                raise ProtocolError(f"invalid JSON body: {exc}") from exc
            if not isinstance(message, dict):
                raise ProtocolError("message must be a JSON object")
            out.append(message)
