"""Framed wire protocol between the master and its workers.

A frame is a 4-byte big-endian payload length followed by UTF-8 text of
``key=value`` pairs separated by single spaces. Keys appear in a fixed
order (kind, protocol_version, run_id, iteration, particle_id, word, b, p,
fitness, topology_id, detail); values are percent-escaped. Payloads above
1 MiB are rejected. decode(encode(m)) == m for every valid message.

ERROR is a local extension kind used by workers to report a malformed
frame before closing the connection; masters treat it like a worker loss.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

PROTOCOL_VERSION = 1
MAX_PAYLOAD = 1 << 20

KINDS = ("HELLO", "ASSIGN", "RESULT", "BEST", "STOP", "ERROR")

_KEY_ORDER = (
    "kind",
    "protocol_version",
    "run_id",
    "iteration",
    "particle_id",
    "word",
    "b",
    "p",
    "fitness",
    "topology_id",
    "detail",
)

# Keys that must be present for each kind (beyond kind/protocol_version/run_id).
_REQUIRED = {
    "HELLO": (),
    "ASSIGN": ("iteration", "particle_id", "word"),
    "RESULT": ("iteration", "particle_id", "word", "b", "p", "fitness"),
    "BEST": ("word", "fitness"),
    "STOP": (),
    "ERROR": ("detail",),
}

_INT_KEYS = {"protocol_version", "iteration", "particle_id"}
_FLOAT_KEYS = {"b", "p", "fitness"}


class FrameError(ValueError):
    """Base class for malformed frames and messages."""


class FrameSizeError(FrameError):
    pass


class FrameTruncatedError(FrameError):
    pass


class UnknownKindError(FrameError):
    pass


class MissingKeyError(FrameError):
    pass


class BadEscapeError(FrameError):
    pass


class FieldFormatError(FrameError):
    pass


@dataclass(frozen=True)
class WireMessage:
    kind: str
    run_id: str
    protocol_version: int = PROTOCOL_VERSION
    iteration: int | None = None
    particle_id: int | None = None
    word: str | None = None
    b: float | None = None
    p: float | None = None
    fitness: float | None = None
    topology_id: str | None = None
    detail: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise UnknownKindError(f"unknown message kind {self.kind!r}")
        for key in _REQUIRED[self.kind]:
            if getattr(self, key) is None:
                raise MissingKeyError(f"{self.kind} message requires {key!r}")


_HEX = "0123456789ABCDEF"


def _escape(value: str) -> str:
    out = []
    for ch in value:
        code = ord(ch)
        if ch in "%= \n\r\t" or code < 0x20 or code > 0x7E:
            for byte in ch.encode("utf-8"):
                out.append(f"%{_HEX[byte >> 4]}{_HEX[byte & 15]}")
        else:
            out.append(ch)
    return "".join(out)


def _unescape(value: str) -> str:
    out = bytearray()
    i = 0
    while i < len(value):
        ch = value[i]
        if ch == "%":
            hex_part = value[i + 1 : i + 3]
            if len(hex_part) != 2 or any(c not in "0123456789abcdefABCDEF" for c in hex_part):
                raise BadEscapeError(f"bad percent escape at offset {i}: {value[i:i+3]!r}")
            out.append(int(hex_part, 16))
            i += 3
        else:
            out.extend(ch.encode("utf-8"))
            i += 1
    try:
        return out.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise BadEscapeError(f"escaped bytes are not valid UTF-8: {exc}") from exc


def encode_payload(m: WireMessage) -> bytes:
    parts = []
    for key in _KEY_ORDER:
        value = getattr(m, key)
        if value is None:
            continue
        if key in _FLOAT_KEYS:
            text = repr(float(value))
        else:
            text = str(value)
        parts.append(f"{key}={_escape(text)}")
    return " ".join(parts).encode("ascii")


def encode_frame(m: WireMessage) -> bytes:
    payload = encode_payload(m)
    if len(payload) > MAX_PAYLOAD:
        raise FrameSizeError(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return len(payload).to_bytes(4, "big") + payload


def decode_payload(payload: bytes) -> WireMessage:
    try:
        text = payload.decode("ascii")
    except UnicodeDecodeError as exc:
        raise FieldFormatError(f"payload is not ASCII: {exc}") from exc
    values: dict[str, object] = {}
    for token in text.split(" "):
        if not token:
            raise FieldFormatError("empty token (double space?) in payload")
        key, eq, raw = token.partition("=")
        if not eq:
            raise FieldFormatError(f"token {token!r} lacks '='")
        if key not in _KEY_ORDER:
            raise FieldFormatError(f"unknown key {key!r}")
        if key in values:
            raise FieldFormatError(f"duplicate key {key!r}")
        value = _unescape(raw)
        if key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError as exc:
                raise FieldFormatError(f"{key} must be an integer, got {value!r}") from exc
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(value)
            except ValueError as exc:
                raise FieldFormatError(f"{key} must be a decimal, got {value!r}") from exc
        else:
            values[key] = value
    for key in ("kind", "run_id", "protocol_version"):
        if key not in values:
            raise MissingKeyError(f"message lacks mandatory key {key!r}")
    kind = values["kind"]
    if kind not in KINDS:
        raise UnknownKindError(f"unknown message kind {kind!r}")
    return WireMessage(**values)  # per-kind required keys checked in __post_init__


def decode_frame(data: bytes) -> WireMessage:
    """Decode one complete frame (header plus payload, nothing more)."""
    if len(data) < 4:
        raise FrameTruncatedError("frame shorter than the 4-byte header")
    length = int.from_bytes(data[:4], "big")
    if length > MAX_PAYLOAD:
        raise FrameSizeError(f"declared payload of {length} bytes exceeds {MAX_PAYLOAD}")
    if len(data) - 4 != length:
        raise FrameTruncatedError(
            f"frame declares {length} payload bytes but carries {len(data) - 4}"
        )
    return decode_payload(data[4:])


assert set(_KEY_ORDER) == {f.name for f in fields(WireMessage)}
