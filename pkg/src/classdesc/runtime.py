"""Schema-driven pack/unpack over a typed value tree.

This is the executable counterpart of the emitted descriptors: it walks a
class exactly as a generated ``pack``/``unpack`` would (bases first, then
members in declaration order, arrays element by element) and appends the
primitive encodings to a :class:`PackBuffer`.

Two encodings are supported. ``native`` is a canonical fixed layout:
little-endian, widths from :data:`~classdesc.model.PRIMITIVE_WIDTHS`, no
padding. ``xdr`` follows RFC 4506: big-endian, every item a multiple of four
bytes, IEEE 754 floats.
"""

import math
import struct
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .model import (
    ARGC_ARGV,
    NO_ARGS,
    PRIMITIVE_WIDTHS,
    SINGLE_OBJECT,
    Array,
    ClassDecl,
    Named,
    Pointer,
    Primitive,
    TypeExpr,
    TypeRegistry,
    classify_pointer,
    union_size,
)

NATIVE = "native"
XDR = "xdr"
MODES = (NATIVE, XDR)


class SerializationError(Exception):
    pass


class RangeError(SerializationError, ValueError):
    pass


class ValueTypeError(SerializationError, TypeError):
    pass


class UnderrunError(SerializationError):
    def __init__(self, member: str, path: str, needed: int, available: int):
        self.member = member
        self.path = path
        self.needed = needed
        self.available = available
        where = member if member == path else f"{member} (at {path})"
        super().__init__(
            f"buffer underrun while unpacking {where or '<root>'}: "
            f"need {needed} bytes, {available} available"
        )


class CorruptionError(SerializationError):
    pass


class CycleError(SerializationError):
    pass


# --------------------------------------------------------------------------
# values


@dataclass
class Prim:
    kind: str
    value: object  # int, float or bool


@dataclass
class Record:
    class_name: str
    # base sub-records first (keyed by base class name), then members
    fields: Dict[str, "Value"] = field(default_factory=dict)

    def __getitem__(self, name: str) -> "Value":
        return self.fields[name]


@dataclass
class ArrayValue:
    items: List["Value"]


@dataclass
class MaybePointer:
    present: bool
    payload: Optional["Value"] = None


@dataclass
class UnionValue:
    data: bytes


@dataclass
class SkippedPointer:
    pass


Value = object  # any of the dataclasses above


# --------------------------------------------------------------------------
# primitive layout

# kind -> (native struct code, xdr struct code)
LAYOUT = {
    "bool": ("<B", ">I"),
    "char": ("<b", ">i"),
    "int8": ("<b", ">i"),
    "int16": ("<h", ">i"),
    "int32": ("<i", ">i"),
    "int64": ("<q", ">q"),
    "uint8": ("<B", ">I"),
    "uint16": ("<H", ">I"),
    "uint32": ("<I", ">I"),
    "uint64": ("<Q", ">Q"),
    "float32": ("<f", ">f"),
    "float64": ("<d", ">d"),
}


def _int_range(kind: str) -> Tuple[int, int]:
    bits = PRIMITIVE_WIDTHS[kind] * 8
    if kind.startswith("uint"):
        return 0, (1 << bits) - 1
    return -(1 << (bits - 1)), (1 << (bits - 1)) - 1


def encoded_width(kind: str, mode: str) -> int:
    return struct.calcsize(LAYOUT[kind][0 if mode == NATIVE else 1])


def encode_primitive(kind: str, payload, mode: str) -> bytes:
    """Encode one primitive. Pure function of its arguments."""
    if kind not in LAYOUT:
        raise ValueTypeError(f"unknown primitive kind {kind!r}")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    code = LAYOUT[kind][0 if mode == NATIVE else 1]
    if kind == "bool":
        if not isinstance(payload, bool):
            raise ValueTypeError(f"bool payload expected, got {payload!r}")
        return struct.pack(code, int(payload))
    if kind.startswith("float"):
        if isinstance(payload, bool) or not isinstance(payload, (int, float)):
            raise ValueTypeError(f"{kind} payload must be a number, got {payload!r}")
        try:
            return struct.pack(code, float(payload))
        except OverflowError:
            raise RangeError(f"{payload!r} out of range for {kind}") from None
    if isinstance(payload, bool) or not isinstance(payload, int):
        raise ValueTypeError(f"{kind} payload must be an integer, got {payload!r}")
    lo, hi = _int_range(kind)
    if not lo <= payload <= hi:
        raise RangeError(f"{payload} out of range for {kind} [{lo}, {hi}]")
    return struct.pack(code, payload)


def decode_primitive(kind: str, data: bytes, mode: str):
    code = LAYOUT[kind][0 if mode == NATIVE else 1]
    (raw,) = struct.unpack(code, data)
    if kind == "bool":
        if raw not in (0, 1):
            raise CorruptionError(f"invalid bool encoding {raw}")
        return bool(raw)
    if kind.startswith("float"):
        return raw
    lo, hi = _int_range(kind)
    if not lo <= raw <= hi:
        raise CorruptionError(f"{raw} out of range for {kind}")
    return raw


# --------------------------------------------------------------------------
# buffer


class PackBuffer:
    """Append/consume byte repository with a read cursor."""

    def __init__(self, mode: str = NATIVE, data: bytes = b""):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.data = bytearray(data)
        self.cursor = 0
        self.warnings: List[str] = []

    def __len__(self):
        return len(self.data)

    def __bytes__(self):
        return bytes(self.data)

    def append(self, chunk: bytes) -> "PackBuffer":
        self.data += chunk
        return self

    def remaining(self) -> int:
        return len(self.data) - self.cursor

    def consume(self, n: int, member: str = "", path: str = "") -> bytes:
        if n > self.remaining():
            raise UnderrunError(member, path or member, n, self.remaining())
        out = bytes(self.data[self.cursor:self.cursor + n])
        self.cursor += n
        return out

    def warn(self, message: str) -> None:
        self.warnings.append(message)


def append(buffer: PackBuffer, chunk: bytes) -> PackBuffer:
    return buffer.append(chunk)


# --------------------------------------------------------------------------
# traversal helpers


def _class(registry: TypeRegistry, name: str) -> ClassDecl:
    cls = registry.classes.get(name)
    if cls is None:
        raise ValueTypeError(f"no descriptor for type {name}")
    if cls.template_params and "<" not in name:
        raise ValueTypeError(f"template class {name} cannot be serialized uninstantiated")
    return cls


def _strip_index(path: str) -> str:
    # ".a[3].b[1]" -> ".a.b": the member named by a path
    out, depth = [], 0
    for ch in path:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif depth == 0:
            out.append(ch)
    return "".join(out)


class _Packer:
    def __init__(self, buf: PackBuffer, registry: TypeRegistry, trace):
        self.buf = buf
        self.reg = registry
        self.trace = trace
        self.seen = set()

    def visit(self, name: str, what: str) -> None:
        if self.trace is not None:
            self.trace.append((name, what))

    def pack(self, name: str, value, t: TypeExpr) -> None:
        if isinstance(t, Primitive):
            if not isinstance(value, Prim) or value.kind != t.kind:
                raise ValueTypeError(f"{name}: expected {t.kind} value, got {value!r}")
            self.visit(name, t.kind)
            self.buf.append(encode_primitive(t.kind, value.value, self.buf.mode))
        elif isinstance(t, Array):
            if not isinstance(value, ArrayValue) or len(value.items) != t.extent:
                raise ValueTypeError(f"{name}: expected array of {t.extent}, got {value!r}")
            for i, item in enumerate(value.items):
                self.pack(f"{name}[{i}]", item, t.element)
        elif isinstance(t, Pointer):
            self.pointer(name, value, t)
        elif isinstance(t, Named):
            self.named(name, value, t.name)
        else:
            raise ValueTypeError(f"{name}: unsupported type {t!r}")

    def pointer(self, name: str, value, t: Pointer) -> None:
        kind = classify_pointer(t, self.reg)
        if kind != SINGLE_OBJECT:
            label = "member pointer" if kind == "member-pointer" else "generic pointer"
            self.visit(name, "skip")
            self.buf.warn(f"skipping {label} {name}")
            return
        if not isinstance(value, MaybePointer):
            raise ValueTypeError(f"{name}: expected optional pointer value, got {value!r}")
        self.visit(name, "flag")
        if not value.present:
            self.buf.append(b"\x00")
            return
        if id(value.payload) in self.seen:
            raise CycleError(f"cyclic structure: {name} revisits an object already packed")
        self.seen.add(id(value.payload))
        self.buf.append(b"\x01")
        self.pack(name, value.payload, t.pointee)

    def named(self, name: str, value, type_name: str) -> None:
        cls = _class(self.reg, type_name)
        if cls.kind == "union":
            if self.buf.mode == XDR:
                raise SerializationError(f"{name}: unions have no XDR encoding")
            size = union_size(cls, self.reg)
            if not isinstance(value, UnionValue) or len(value.data) != size:
                raise ValueTypeError(f"{name}: expected {size}-byte union blob, got {value!r}")
            self.visit(name, "union")
            self.buf.append(value.data)
            return
        if not isinstance(value, Record) or value.class_name != cls.name:
            raise ValueTypeError(f"{name}: expected {cls.name} record, got {value!r}")
        for b in cls.bases:
            if b.name not in value.fields:
                raise ValueTypeError(f"{name}: missing base {b.name}")
            # base descriptors receive the same name, as in the generated code
            self.pack(name, value.fields[b.name], Named(b.name))
        for m in cls.data_members():
            if m.name not in value.fields:
                raise ValueTypeError(f"{name}.{m.name}: missing member value")
            self.pack(f"{name}.{m.name}", value.fields[m.name], m.type)


def pack(buffer: PackBuffer, name: str, value, type_: TypeExpr, registry: TypeRegistry,
         trace: Optional[list] = None) -> PackBuffer:
    """Append the encoding of ``value`` (of type ``type_``) to ``buffer``.

    ``name`` prefixes member paths used in warnings. If ``trace`` is a list,
    each visited leaf is appended to it as ``(path, what)``.
    """
    _Packer(buffer, registry, trace).pack(name, value, type_)
    return buffer


def stream_pack(buffer: PackBuffer, values: Iterable[Tuple[object, TypeExpr]],
                registry: TypeRegistry) -> PackBuffer:
    """``buf << a << b``: pack each value with an empty name, in order."""
    for value, t in values:
        pack(buffer, "", value, t, registry)
    return buffer


class _Unpacker:
    def __init__(self, buf: PackBuffer, registry: TypeRegistry, trace):
        self.buf = buf
        self.reg = registry
        self.trace = trace

    def read(self, n: int, path: str) -> bytes:
        return self.buf.consume(n, _strip_index(path), path)

    def unpack(self, name: str, t: TypeExpr):
        if isinstance(t, Primitive):
            if self.trace is not None:
                self.trace.append((name, t.kind))
            data = self.read(encoded_width(t.kind, self.buf.mode), name)
            try:
                return Prim(t.kind, decode_primitive(t.kind, data, self.buf.mode))
            except CorruptionError as exc:
                raise CorruptionError(f"{name}: {exc}") from None
        if isinstance(t, Array):
            return ArrayValue([self.unpack(f"{name}[{i}]", t.element) for i in range(t.extent)])
        if isinstance(t, Pointer):
            kind = classify_pointer(t, self.reg)
            if kind != SINGLE_OBJECT:
                return SkippedPointer()
            flag = self.read(1, name)[0]
            if flag == 0:
                return MaybePointer(False)
            if flag != 1:
                raise CorruptionError(f"{name}: invalid pointer flag byte 0x{flag:02x}")
            return MaybePointer(True, self.unpack(name, t.pointee))
        if isinstance(t, Named):
            cls = _class(self.reg, t.name)
            if cls.kind == "union":
                if self.buf.mode == XDR:
                    raise SerializationError(f"{name}: unions have no XDR encoding")
                return UnionValue(self.read(union_size(cls, self.reg), name))
            rec = Record(cls.name)
            for b in cls.bases:
                rec.fields[b.name] = self.unpack(name, Named(b.name))
            for m in cls.data_members():
                rec.fields[m.name] = self.unpack(f"{name}.{m.name}", m.type)
            return rec
        raise ValueTypeError(f"{name}: unsupported type {t!r}")


def unpack(buffer: PackBuffer, name: str, type_: TypeExpr, registry: TypeRegistry,
           trace: Optional[list] = None):
    """Read one value of ``type_`` at the buffer's cursor."""
    return _Unpacker(buffer, registry, trace).unpack(name, type_)


# --------------------------------------------------------------------------
# textual forms


def format_float32(x: float) -> str:
    """Shortest decimal that reads back to the same float32."""
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    target = struct.pack("<f", x)
    for digits in range(1, 10):
        text = f"{x:.{digits}g}"
        try:
            if struct.pack("<f", float(text)) == target:
                return repr(float(text))
        except OverflowError:
            # rounding pushed the candidate past the float32 range
            continue
    return repr(x)


def format_primitive(p: Prim) -> str:
    if p.kind == "bool":
        return "1" if p.value else "0"
    if p.kind == "float32":
        return format_float32(p.value)
    if p.kind == "float64":
        return repr(float(p.value))
    return str(p.value)


def parse_primitive(kind: str, text: str) -> Prim:
    """Parse the textual form of a primitive, checking its range."""
    text = text.strip()
    try:
        if kind == "bool":
            if text not in ("0", "1"):
                raise ValueError(text)
            value = text == "1"
        elif kind.startswith("float"):
            value = float(text)
            if kind == "float32" and math.isfinite(value):
                value = struct.unpack("<f", encode_primitive("float32", value, NATIVE))[0]
        else:
            value = int(text, 0) if text.lower().startswith(("0x", "-0x")) else int(text)
            encode_primitive(kind, value, NATIVE)
    except RangeError:
        raise
    except (ValueError, SerializationError):
        raise ValueTypeError(f"cannot parse {text!r} as {kind}") from None
    return Prim(kind, value)


# --------------------------------------------------------------------------
# member command binding


class CommandLookupError(KeyError):
    pass


NOT_LINKED = "not linked"


class _Leaf:
    """A settable primitive slot inside a value tree."""

    def __init__(self, holder, key, kind):
        self.holder = holder
        self.key = key
        self.kind = kind

    def get(self) -> Prim:
        return self.holder[self.key]

    def set(self, p: Prim) -> None:
        self.holder[self.key] = p


class CommandRegistry:
    """Named get/set commands over one object's primitive members.

    ``invoke("obj.x")`` returns the member's text, ``invoke("obj.x 7")``
    assigns it. Array commands take an element index. Calls are serialized by
    contract: one caller at a time.
    """

    def __init__(self):
        self.leaves: Dict[str, _Leaf] = {}
        self.arrays: Dict[str, List[_Leaf]] = {}
        self.functions: Dict[str, str] = {}

    def paths(self) -> List[str]:
        return sorted([*self.leaves, *self.arrays, *self.functions])

    def __contains__(self, path: str) -> bool:
        return path in self.leaves or path in self.arrays or path in self.functions

    def __len__(self):
        return len(self.leaves) + len(self.arrays) + len(self.functions)

    def invoke(self, command: str) -> str:
        words = command.split()
        if not words:
            raise CommandLookupError("empty command")
        path, args = words[0], words[1:]
        if path in self.leaves:
            leaf = self.leaves[path]
            if len(args) > 1:
                raise ValueTypeError(f"{path} takes at most one argument")
            if args:
                leaf.set(parse_primitive(leaf.kind, args[0]))
            return format_primitive(leaf.get())
        if path in self.arrays:
            elems = self.arrays[path]
            if not args:
                return " ".join(format_primitive(e.get()) for e in elems)
            try:
                index = int(args[0])
            except ValueError:
                raise ValueTypeError(f"{path}: index {args[0]!r} is not an integer") from None
            if not 0 <= index < len(elems):
                raise CommandLookupError(f"{path}: index {index} out of range")
            if len(args) > 2:
                raise ValueTypeError(f"{path} takes an index and at most one value")
            if len(args) == 2:
                elems[index].set(parse_primitive(elems[index].kind, args[1]))
            return format_primitive(elems[index].get())
        if path in self.functions:
            return NOT_LINKED
        raise CommandLookupError(f"no command {path!r}")


def bind_members(registry: TypeRegistry, class_name: str, root: Record, root_name: str) -> CommandRegistry:
    """Create get/set commands for every primitive member reachable from ``root``."""
    cmds = CommandRegistry()
    seen = set()

    def bind(path: str, holder, key, t: TypeExpr) -> None:
        value = holder[key]
        if isinstance(t, Primitive):
            cmds.leaves[path] = _Leaf(holder, key, t.kind)
        elif isinstance(t, Array):
            if isinstance(t.element, Primitive):
                cmds.arrays[path] = [_Leaf(value.items, i, t.element.kind) for i in range(t.extent)]
            else:
                for i in range(t.extent):
                    bind(f"{path}[{i}]", value.items, i, t.element)
        elif isinstance(t, Pointer):
            if classify_pointer(t, registry) == SINGLE_OBJECT and value.present:
                if id(value.payload) in seen:
                    return
                seen.add(id(value.payload))
                bind(path, value.__dict__, "payload", t.pointee)
        elif isinstance(t, Named):
            record(path, value, t.name)

    def record(path: str, rec, name: str) -> None:
        cls = _class(registry, name)
        if cls.kind == "union":
            return
        for b in cls.bases:
            record(path, rec.fields[b.name], b.name)
        for m in cls.members:
            if m.is_function:
                if m.function_signature_class in (NO_ARGS, ARGC_ARGV):
                    cmds.functions[f"{path}.{m.name}"] = m.name
            elif m.serializable:
                bind(f"{path}.{m.name}", rec.fields, m.name, m.type)

    if not isinstance(root, Record) or root.class_name != class_name:
        raise ValueTypeError(f"root is not a {class_name} record")
    record(root_name, root, class_name)
    return cmds
