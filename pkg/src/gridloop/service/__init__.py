"""Network front end for live runs."""

from .protocol import MessageDecoder, ProtocolError, encode_message
from .server import LiveServer

__all__ = ["MessageDecoder", "ProtocolError", "encode_message", "LiveServer"]
