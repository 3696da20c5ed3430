"""Supported ROS1 message set: canonical definitions, wire format, md5 checksums.

The type set is closed and hardcoded: exactly what teleoperation (Twist),
occupancy-grid display (OccupancyGrid), odometry feedback (Odometry) and log
tailing (Log) require. Wire rules are ROS1 classic: little-endian primitives,
u32-length-prefixed strings and variable-length arrays, fixed arrays written
back to back with no prefix, nested messages inlined without framing.

Everything here is pure and safe to call concurrently.
"""

from __future__ import annotations

import hashlib
import logging
import math
import re
import struct
from dataclasses import dataclass, field

log = logging.getLogger(__name__)


class UnknownTypeError(KeyError):
    """Requested message type is outside the supported set."""


class SerializationError(ValueError):
    """Value does not conform to its schema (wrong shape, range, or non-finite float)."""


class DeserializationError(ValueError):
    """Byte buffer is not a well-formed message body for the schema."""


# ---------------------------------------------------------------------------
# Value model


@dataclass
class RosTime:
    secs: int = 0
    nsecs: int = 0


@dataclass
class Header:
    seq: int = 0
    stamp: RosTime = field(default_factory=RosTime)
    frame_id: str = ""


@dataclass
class Vector3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0


@dataclass
class Point:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0


@dataclass
class Quaternion:
    # Defaults to the identity rotation so freshly built poses are unit-norm.
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    w: float = 1.0


@dataclass
class Pose:
    position: Point = field(default_factory=Point)
    orientation: Quaternion = field(default_factory=Quaternion)


@dataclass
class PoseWithCovariance:
    pose: Pose = field(default_factory=Pose)
    covariance: list[float] = field(default_factory=lambda: [0.0] * 36)


@dataclass
class Twist:
    linear: Vector3 = field(default_factory=Vector3)
    angular: Vector3 = field(default_factory=Vector3)


@dataclass
class TwistWithCovariance:
    twist: Twist = field(default_factory=Twist)
    covariance: list[float] = field(default_factory=lambda: [0.0] * 36)


@dataclass
class MapMetaData:
    map_load_time: RosTime = field(default_factory=RosTime)
    resolution: float = 0.0
    width: int = 0
    height: int = 0
    origin: Pose = field(default_factory=Pose)


@dataclass
class OccupancyGrid:
    header: Header = field(default_factory=Header)
    info: MapMetaData = field(default_factory=MapMetaData)
    # Row-major int8 cells as raw two's-complement bytes (-1 == 0xFF).
    data: bytes = b""


@dataclass
class Odometry:
    header: Header = field(default_factory=Header)
    child_frame_id: str = ""
    pose: PoseWithCovariance = field(default_factory=PoseWithCovariance)
    twist: TwistWithCovariance = field(default_factory=TwistWithCovariance)


LOG_DEBUG, LOG_INFO, LOG_WARN, LOG_ERROR, LOG_FATAL = 1, 2, 4, 8, 16


@dataclass
class Log:
    header: Header = field(default_factory=Header)
    level: int = LOG_INFO
    name: str = ""
    msg: str = ""
    file: str = ""
    function: str = ""
    line: int = 0
    topics: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Definitions and schema parsing

# Canonical field lists, comment-free and whitespace-normalized. Field order,
# type tokens, and constants reproduce the stock ROS1 definitions so the md5
# chain below matches a genuine ROS peer at handshake time.
_DEFINITIONS: dict[str, str] = {
    "std_msgs/Header": "uint32 seq\ntime stamp\nstring frame_id",
    "geometry_msgs/Vector3": "float64 x\nfloat64 y\nfloat64 z",
    "geometry_msgs/Point": "float64 x\nfloat64 y\nfloat64 z",
    "geometry_msgs/Quaternion": "float64 x\nfloat64 y\nfloat64 z\nfloat64 w",
    "geometry_msgs/Pose": "Point position\nQuaternion orientation",
    "geometry_msgs/PoseWithCovariance": "Pose pose\nfloat64[36] covariance",
    "geometry_msgs/Twist": "Vector3 linear\nVector3 angular",
    "geometry_msgs/TwistWithCovariance": "Twist twist\nfloat64[36] covariance",
    "nav_msgs/MapMetaData": (
        "time map_load_time\nfloat32 resolution\nuint32 width\nuint32 height\n"
        "geometry_msgs/Pose origin"
    ),
    "nav_msgs/OccupancyGrid": "Header header\nMapMetaData info\nint8[] data",
    "nav_msgs/Odometry": (
        "Header header\nstring child_frame_id\n"
        "geometry_msgs/PoseWithCovariance pose\ngeometry_msgs/TwistWithCovariance twist"
    ),
    "rosgraph_msgs/Log": (
        "byte DEBUG=1\nbyte INFO=2\nbyte WARN=4\nbyte ERROR=8\nbyte FATAL=16\n"
        "Header header\nbyte level\nstring name\nstring msg\nstring file\n"
        "string function\nuint32 line\nstring[] topics"
    ),
}

MESSAGE_CLASSES: dict[str, type] = {
    "std_msgs/Header": Header,
    "geometry_msgs/Vector3": Vector3,
    "geometry_msgs/Point": Point,
    "geometry_msgs/Quaternion": Quaternion,
    "geometry_msgs/Pose": Pose,
    "geometry_msgs/PoseWithCovariance": PoseWithCovariance,
    "geometry_msgs/Twist": Twist,
    "geometry_msgs/TwistWithCovariance": TwistWithCovariance,
    "nav_msgs/MapMetaData": MapMetaData,
    "nav_msgs/OccupancyGrid": OccupancyGrid,
    "nav_msgs/Odometry": Odometry,
    "rosgraph_msgs/Log": Log,
}

SUPPORTED_TYPES: tuple[str, ...] = tuple(_DEFINITIONS)

_PRIMITIVE_FMT = {
    "bool": "?",
    "int8": "b",
    "byte": "b",
    "uint8": "B",
    "char": "B",
    "int16": "h",
    "uint16": "H",
    "int32": "i",
    "uint32": "I",
    "int64": "q",
    "uint64": "Q",
    "float32": "f",
    "float64": "d",
}
_BYTE_SIZED = {"int8", "byte", "uint8", "char"}
BUILTIN_TYPES = frozenset(_PRIMITIVE_FMT) | {"string", "time", "duration"}

_FIELD_RE = re.compile(r"^([A-Za-z_][\w/]*)(\[(\d*)\])?$")

# array_len: None = scalar, -1 = variable length, n >= 0 = fixed length
SCALAR, VARIABLE = None, -1


@dataclass(frozen=True)
class ConstantSpec:
    type: str
    name: str
    value_text: str


@dataclass(frozen=True)
class FieldSpec:
    base_type: str  # builtin name, or fully qualified "package/Name"
    name: str
    array_len: int | None

    @property
    def is_builtin(self) -> bool:
        return self.base_type in BUILTIN_TYPES

    def md5_token(self) -> str:
        """Type token as it appears in md5 text (brackets kept for builtins)."""
        if self.array_len == VARIABLE:
            return f"{self.base_type}[]"
        if self.array_len is not None:
            return f"{self.base_type}[{self.array_len}]"
        return self.base_type


@dataclass(frozen=True)
class MessageSchema:
    type_name: str
    definition_text: str
    md5: str
    fields: tuple[FieldSpec, ...]
    constants: tuple[ConstantSpec, ...]


def _resolve_type(token: str, package: str) -> str:
    if token in BUILTIN_TYPES:
        return token
    if token == "Header":  # classic ROS1 shorthand
        return "std_msgs/Header"
    if "/" in token:
        return token
    return f"{package}/{token}"


def _parse_definition(type_name: str, text: str) -> tuple[tuple[ConstantSpec, ...], tuple[FieldSpec, ...]]:
    package = type_name.split("/", 1)[0]
    constants: list[ConstantSpec] = []
    fields: list[FieldSpec] = []
    for raw in text.split("\n"):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        type_token, _, rest = line.partition(" ")
        rest = rest.strip()
        if "=" in rest:
            name, _, value = rest.partition("=")
            constants.append(ConstantSpec(type_token, name.strip(), value.strip()))
            continue
        m = _FIELD_RE.match(type_token)
        if m is None or not rest or len(rest.split()) != 1:
            raise ValueError(f"{type_name}: malformed definition line {raw!r}")
        base, brackets, length = m.groups()
        if brackets is None:
            array_len = SCALAR
        elif length == "":
            array_len = VARIABLE
        else:
            array_len = int(length)
        fields.append(FieldSpec(_resolve_type(base, package), rest, array_len))
    return tuple(constants), tuple(fields)


_SCHEMA_CACHE: dict[str, MessageSchema] = {}
_MD5_CACHE: dict[str, str] = {}


def _md5_text(type_name: str) -> str:
    """Assemble the checksum text: constants first, builtin fields verbatim,
    embedded message fields with their type token replaced by that type's md5."""
    constants, fields = _parse_definition(type_name, _DEFINITIONS[type_name])
    lines = [f"{c.type} {c.name}={c.value_text}" for c in constants]
    for f in fields:
        if f.is_builtin:
            lines.append(f"{f.md5_token()} {f.name}")
        else:
            lines.append(f"{compute_md5(f.base_type)} {f.name}")
    return "\n".join(lines)


def compute_md5(type_name: str) -> str:
    """32-hex-char checksum identifying a message type at handshake time."""
    if type_name not in _DEFINITIONS:
        raise UnknownTypeError(type_name)
    cached = _MD5_CACHE.get(type_name)
    if cached is None:
        cached = hashlib.md5(_md5_text(type_name).encode()).hexdigest()
        _MD5_CACHE[type_name] = cached
    return cached


def _direct_dependencies(type_name: str) -> list[str]:
    _, fields = _parse_definition(type_name, _DEFINITIONS[type_name])
    deps = []
    for f in fields:
        if not f.is_builtin and f.base_type not in deps:
            deps.append(f.base_type)
    return deps


def canonical_definition_text(type_name: str) -> str:
    """Full recursive definition: the type's own text, then one separator block
    per embedded type (depth-first, duplicates skipped)."""
    if type_name not in _DEFINITIONS:
        raise UnknownTypeError(type_name)
    parts = [_DEFINITIONS[type_name]]
    seen: set[str] = set()

    def visit(tn: str) -> None:
        for dep in _direct_dependencies(tn):
            if dep in seen:
                continue
            seen.add(dep)
            parts.append("=" * 80 + "\nMSG: " + dep + "\n" + _DEFINITIONS[dep])
            visit(dep)

    visit(type_name)
    return "\n".join(parts)


def get_schema(type_name: str) -> MessageSchema:
    if type_name not in _DEFINITIONS:
        raise UnknownTypeError(type_name)
    schema = _SCHEMA_CACHE.get(type_name)
    if schema is None:
        constants, fields = _parse_definition(type_name, _DEFINITIONS[type_name])
        for f in fields:
            if not f.is_builtin and f.base_type not in _DEFINITIONS:
                raise UnknownTypeError(f.base_type)
        schema = MessageSchema(
            type_name=type_name,
            definition_text=_DEFINITIONS[type_name],
            md5=compute_md5(type_name),
            fields=fields,
            constants=constants,
        )
        _SCHEMA_CACHE[type_name] = schema
    return schema


def message_class(type_name: str) -> type:
    try:
        return MESSAGE_CLASSES[type_name]
    except KeyError:
        raise UnknownTypeError(type_name) from None


# ---------------------------------------------------------------------------
# Serialization

_U32 = struct.Struct("<I")


def _check_finite(value: float, path: str) -> None:
    if not math.isfinite(value):
        raise SerializationError(f"{path}: non-finite float {value!r}")


def _write_primitive(buf: bytearray, base: str, value, path: str) -> None:
    fmt = _PRIMITIVE_FMT[base]
    if fmt in ("f", "d"):
        _check_finite(value, path)
    try:
        buf += struct.pack("<" + fmt, value)
    except (struct.error, TypeError) as exc:
        raise SerializationError(f"{path}: {exc}") from None


def _write_value(buf: bytearray, spec: FieldSpec, value, path: str) -> None:
    base = spec.base_type
    if spec.array_len is not SCALAR:
        _write_array(buf, spec, value, path)
    elif base == "string":
        if not isinstance(value, str):
            raise SerializationError(f"{path}: expected str, got {type(value).__name__}")
        raw = value.encode("utf-8")
        buf += _U32.pack(len(raw)) + raw
    elif base in ("time", "duration"):
        try:
            secs, nsecs = value.secs, value.nsecs
        except AttributeError:
            raise SerializationError(f"{path}: expected RosTime") from None
        if not 0 <= nsecs < 1_000_000_000:
            raise SerializationError(f"{path}: nsecs out of range: {nsecs}")
        try:
            buf += struct.pack("<II", secs, nsecs)
        except (struct.error, TypeError) as exc:
            raise SerializationError(f"{path}: {exc}") from None
    elif base in _PRIMITIVE_FMT:
        _write_primitive(buf, base, value, path)
    else:
        _write_message(buf, value, get_schema(base), path)


def _write_array(buf: bytearray, spec: FieldSpec, value, path: str) -> None:
    base = spec.base_type
    if base in _BYTE_SIZED:
        # int8[]/uint8[] travel as raw bytes
        if not isinstance(value, (bytes, bytearray)):
            raise SerializationError(f"{path}: expected bytes for {base}[], got {type(value).__name__}")
        if spec.array_len not in (VARIABLE, len(value)):
            raise SerializationError(f"{path}: fixed array needs {spec.array_len} bytes, got {len(value)}")
        if spec.array_len == VARIABLE:
            buf += _U32.pack(len(value))
        buf += value
        return
    if isinstance(value, (str, bytes)) or not hasattr(value, "__len__"):
        raise SerializationError(f"{path}: expected a sequence, got {type(value).__name__}")
    if spec.array_len == VARIABLE:
        buf += _U32.pack(len(value))
    elif len(value) != spec.array_len:
        raise SerializationError(f"{path}: fixed array needs {spec.array_len} elements, got {len(value)}")
    if base in _PRIMITIVE_FMT:
        fmt = _PRIMITIVE_FMT[base]
        if fmt in ("f", "d"):
            for i, item in enumerate(value):
                if not math.isfinite(item):
                    raise SerializationError(f"{path}[{i}]: non-finite float {item!r}")
        try:
            buf += struct.pack(f"<{len(value)}{fmt}", *value)
        except (struct.error, TypeError) as exc:
            raise SerializationError(f"{path}: {exc}") from None
        return
    element = FieldSpec(base, spec.name, SCALAR)
    for i, item in enumerate(value):
        _write_value(buf, element, item, f"{path}[{i}]")


def _write_message(buf: bytearray, value, schema: MessageSchema, path: str) -> None:
    for spec in schema.fields:
        try:
            item = getattr(value, spec.name)
        except AttributeError:
            raise SerializationError(
                f"{path}: value of type {type(value).__name__} lacks field {spec.name!r}"
            ) from None
        _write_value(buf, spec, item, f"{path}.{spec.name}")


def serialize_message(value, schema: MessageSchema) -> bytes:
    """Message body bytes (no outer frame length). Rejects values that do not
    conform to the schema and any non-finite float: strict in what we send."""
    buf = bytearray()
    _write_message(buf, value, schema, schema.type_name)
    return bytes(buf)


class _Reader:
    __slots__ = ("data", "offset")

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int, path: str) -> bytes:
        end = self.offset + n
        if end > len(self.data):
            raise DeserializationError(f"{path}: truncated buffer ({n} bytes needed, {len(self.data) - self.offset} left)")
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def u32(self, path: str) -> int:
        return _U32.unpack(self.take(4, path))[0]


def _read_value(r: _Reader, spec: FieldSpec, path: str):
    base = spec.base_type
    if spec.array_len is not SCALAR:
        return _read_array(r, spec, path)
    if base == "string":
        n = r.u32(path)
        raw = r.take(n, path)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DeserializationError(f"{path}: invalid UTF-8: {exc}") from None
    if base in ("time", "duration"):
        secs, nsecs = struct.unpack("<II", r.take(8, path))
        return RosTime(secs, nsecs)
    if base in _PRIMITIVE_FMT:
        fmt = _PRIMITIVE_FMT[base]
        (value,) = struct.unpack("<" + fmt, r.take(struct.calcsize(fmt), path))
        if fmt in ("f", "d") and not math.isfinite(value):
            # Tolerant in what we accept; publication would have refused it.
            log.warning("non-finite float accepted at %s: %r", path, value)
        return value
    return _read_message(r, get_schema(base), path)


def _read_array(r: _Reader, spec: FieldSpec, path: str):
    count = r.u32(path) if spec.array_len == VARIABLE else spec.array_len
    if spec.base_type in _BYTE_SIZED:
        return r.take(count, path)
    if spec.base_type in _PRIMITIVE_FMT:
        fmt = _PRIMITIVE_FMT[spec.base_type]
        size = struct.calcsize(fmt)
        return list(struct.unpack(f"<{count}{fmt}", r.take(count * size, path)))
    element = FieldSpec(spec.base_type, spec.name, SCALAR)
    return [_read_value(r, element, f"{path}[{i}]") for i in range(count)]


def _read_message(r: _Reader, schema: MessageSchema, path: str):
    kwargs = {spec.name: _read_value(r, spec, f"{path}.{spec.name}") for spec in schema.fields}
    return MESSAGE_CLASSES[schema.type_name](**kwargs)


def deserialize_message(data: bytes, schema: MessageSchema):
    """Inverse of serialize_message over a complete message body."""
    r = _Reader(data)
    value = _read_message(r, schema, schema.type_name)
    if r.offset != len(data):
        raise DeserializationError(
            f"{schema.type_name}: {len(data) - r.offset} trailing bytes after message body"
        )
    return value
