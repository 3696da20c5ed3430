"""TCPROS wire protocol: connection-header handshake and message framing.

A connection starts with one header block from each side (subscriber first),
then the publisher streams frames. Headers and frames share the same outer
shape: a u32 little-endian length followed by that many payload bytes. Inside
a header the payload is a list of fields, each its own u32 length plus
"key=value" bytes.
"""

from __future__ import annotations

import socket
import struct
from collections.abc import Mapping

from .messages import MessageSchema

DEFAULT_MAX_FRAME = 16 * 1024 * 1024  # a 1024x1024 grid is ~1 MiB
HANDSHAKE_TIMEOUT = 5.0

_U32 = struct.Struct("<I")


class TransportError(Exception):
    """Base class for TCPROS protocol failures."""


class HeaderError(TransportError):
    """Malformed connection-header bytes."""


class HandshakeError(TransportError):
    """Peer rejected the connection or sent incompatible type information."""


class FrameError(TransportError):
    """Truncated or oversized message frame."""


def _set_nodelay(sock: socket.socket) -> None:
    try:
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    except OSError:
        pass  # non-TCP socket (tests use socketpair); latency hint only


# ---------------------------------------------------------------------------
# Connection header encoding


def encode_header(fields: Mapping[str, str]) -> bytes:
    """Full wire bytes: u32 total length, then per field u32 length + "key=value".

    Insertion order of ``fields`` is preserved on the wire.
    """
    body = bytearray()
    for key, value in fields.items():
        if not key or "=" in key:
            raise HeaderError(f"invalid header key {key!r}")
        raw = f"{key}={value}".encode("utf-8")
        body += _U32.pack(len(raw)) + raw
    return _U32.pack(len(body)) + bytes(body)


def _parse_header_fields(body: bytes) -> dict[str, str]:
    fields: dict[str, str] = {}
    offset = 0
    while offset < len(body):
        if offset + 4 > len(body):
            raise HeaderError("truncated header: field length cut short")
        (n,) = _U32.unpack_from(body, offset)
        offset += 4
        if offset + n > len(body):
            raise HeaderError("truncated header: declared field length overruns buffer")
        raw = body[offset:offset + n]
        offset += n
        key, sep, value = raw.decode("utf-8", errors="replace").partition("=")
        if not sep:
            raise HeaderError(f"header field without '=': {raw[:40]!r}")
        fields[key] = value  # values may contain '='; split on the first only
    return fields


def decode_header(data: bytes) -> dict[str, str]:
    """Inverse of encode_header over a complete header block."""
    if len(data) < 4:
        raise HeaderError("truncated header: missing length prefix")
    (total,) = _U32.unpack_from(data, 0)
    if 4 + total != len(data):
        raise HeaderError(f"header length mismatch: declared {total}, got {len(data) - 4}")
    return _parse_header_fields(data[4:])


# ---------------------------------------------------------------------------
# Socket framing


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = bytearray()
    while len(chunks) < n:
        try:
            chunk = sock.recv(n - len(chunks))
        except socket.timeout as exc:
            raise FrameError(f"timed out waiting for {n} bytes") from exc
        if not chunk:
            raise FrameError(f"connection closed mid-read ({len(chunks)}/{n} bytes)")
        chunks += chunk
    return bytes(chunks)


def read_frame(sock: socket.socket, max_frame: int = DEFAULT_MAX_FRAME) -> bytes | None:
    """Next frame body, or None on clean EOF at a frame boundary."""
    try:
        head = sock.recv(4)
    except socket.timeout as exc:
        raise FrameError("timed out waiting for frame length") from exc
    except OSError:
        # Socket torn down underneath us (local shutdown): treat as EOF.
        return None
    if not head:
        return None
    if len(head) < 4:
        head += _recv_exact(sock, 4 - len(head))
    (n,) = _U32.unpack(head)
    if n > max_frame:
        raise FrameError(f"frame of {n} bytes exceeds limit of {max_frame}")
    return _recv_exact(sock, n)


def write_frame(sock: socket.socket, body: bytes) -> None:
    """One atomic length-prefixed frame. Callers serialize concurrent writers."""
    sock.sendall(_U32.pack(len(body)) + body)


def read_header(sock: socket.socket, max_frame: int = DEFAULT_MAX_FRAME) -> dict[str, str]:
    frame = read_frame(sock, max_frame)
    if frame is None:
        raise HandshakeError("connection closed before header")
    return _parse_header_fields(frame)


def write_header(sock: socket.socket, fields: Mapping[str, str]) -> None:
    sock.sendall(encode_header(fields))


# ---------------------------------------------------------------------------
# Handshakes


def _types_compatible(mine: str, theirs: str) -> bool:
    return mine == theirs or mine == "*" or theirs == "*"


def subscriber_handshake(
    sock: socket.socket,
    topic: str,
    schema: MessageSchema,
    callerid: str,
    timeout: float = HANDSHAKE_TIMEOUT,
) -> dict[str, str]:
    """Initiate the subscriber side; returns the publisher's header fields.

    Sends our identification, reads the reply, and rejects the stream before
    any message is read if the publisher reports an error or an incompatible
    type/md5sum (either side may use the "*" wildcard).
    """
    sock.settimeout(timeout)
    _set_nodelay(sock)
    write_header(sock, {
        "callerid": callerid,
        "topic": topic,
        "type": schema.type_name,
        "md5sum": schema.md5,
        "tcp_nodelay": "1",
    })
    reply = read_header(sock)
    if "error" in reply:
        raise HandshakeError(f"publisher rejected {topic}: {reply['error']}")
    peer_md5 = reply.get("md5sum", "*")
    peer_type = reply.get("type", "*")
    if not _types_compatible(schema.md5, peer_md5):
        raise HandshakeError(f"md5sum mismatch on {topic}: local {schema.md5}, remote {peer_md5}")
    if not _types_compatible(schema.type_name, peer_type):
        raise HandshakeError(f"type mismatch on {topic}: local {schema.type_name}, remote {peer_type}")
    sock.settimeout(None)
    return reply


def send_error_header(sock: socket.socket, reason: str) -> None:
    try:
        write_header(sock, {"error": reason})
    except OSError:
        pass


def complete_publisher_handshake(
    sock: socket.socket,
    request: Mapping[str, str],
    topic: str,
    schema: MessageSchema,
    callerid: str,
    latching: bool,
) -> str:
    """Validate a subscriber's header and reply; returns the peer callerid.

    On mismatch an error header is written and HandshakeError raised; no
    message bytes ever precede a successful reply.
    """
    for required in ("callerid", "topic", "md5sum"):
        if required not in request:
            send_error_header(sock, f"missing required header field {required!r}")
            raise HandshakeError(f"subscriber header missing {required!r}")
    if request["topic"] != topic:
        send_error_header(sock, f"topic not published: {request['topic']}")
        raise HandshakeError(f"asked for {request['topic']}, serving {topic}")
    if not _types_compatible(schema.md5, request["md5sum"]):
        send_error_header(sock, f"md5sum mismatch: expected {schema.md5}")
        raise HandshakeError(f"md5sum mismatch from {request['callerid']}")
    if not _types_compatible(schema.type_name, request.get("type", "*")):
        send_error_header(sock, f"type mismatch: expected {schema.type_name}")
        raise HandshakeError(f"type mismatch from {request['callerid']}")
    if request.get("tcp_nodelay") == "1":
        _set_nodelay(sock)
    write_header(sock, {
        "callerid": callerid,
        "type": schema.type_name,
        "md5sum": schema.md5,
        "message_definition": _full_definition(schema),
        "latching": "1" if latching else "0",
    })
    return request["callerid"]


def _full_definition(schema: MessageSchema) -> str:
    from .messages import canonical_definition_text

    return canonical_definition_text(schema.type_name)
