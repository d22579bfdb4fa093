"""Keyed text format for value trees: one ``path = literal`` line per leaf.

Paths follow descriptor naming (``.x``, ``.z[5]``, ``.next.val``); base
class members share their derived object's path. Single-object pointers
are written as ``path = null`` when absent and ``path = present`` when
present, followed by the pointee's leaves. Unions are ``path = blob:<hex>``.
"""

from typing import Dict, List, Tuple

from .model import SINGLE_OBJECT, Array, Named, Pointer, Primitive, TypeExpr, TypeRegistry, classify_pointer, union_size
from .runtime import (
    ArrayValue,
    MaybePointer,
    Record,
    SkippedPointer,
    UnionValue,
    ValueTypeError,
    _class,
    format_primitive,
    parse_primitive,
)


class ValueFileError(ValueError):
    pass


def flatten(value, type_: TypeExpr, registry: TypeRegistry, root: str = "") -> List[Tuple[str, str]]:
    out: List[Tuple[str, str]] = []
    seen = set()

    def emit(path: str, text: str) -> None:
        if path in seen:
            raise ValueFileError(f"ambiguous path {path!r} (a base member is shadowed)")
        seen.add(path)
        out.append((path, text))

    def walk(path: str, v, t: TypeExpr) -> None:
        if isinstance(t, Primitive):
            emit(path, format_primitive(v))
        elif isinstance(t, Array):
            for i, item in enumerate(v.items):
                walk(f"{path}[{i}]", item, t.element)
        elif isinstance(t, Pointer):
            if classify_pointer(t, registry) != SINGLE_OBJECT:
                return
            if not v.present:
                emit(path, "null")
            else:
                emit(path, "present")
                walk(path, v.payload, t.pointee)
        elif isinstance(t, Named):
            cls = _class(registry, t.name)
            if cls.kind == "union":
                emit(path, "blob:" + v.data.hex())
                return
            for b in cls.bases:
                walk(path, v.fields[b.name], Named(b.name))
            for m in cls.data_members():
                walk(f"{path}.{m.name}", v.fields[m.name], m.type)

    walk(root, value, type_)
    return out


def dumps(value, type_: TypeExpr, registry: TypeRegistry) -> str:
    return "".join(f"{p} = {t}\n" for p, t in flatten(value, type_, registry))


def parse_lines(text: str) -> Dict[str, str]:
    entries: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        path, sep, literal = line.partition("=")
        if not sep:
            raise ValueFileError(f"line {lineno}: expected 'path = value'")
        path = path.strip()
        if path and not path.startswith("."):
            path = "." + path
        if path in entries:
            raise ValueFileError(f"line {lineno}: duplicate path {path}")
        entries[path] = literal.strip()
    return entries


def loads(text: str, type_: TypeExpr, registry: TypeRegistry):
    """Build a value of ``type_`` from the keyed text form."""
    entries = parse_lines(text)
    used = set()

    def take(path: str) -> str:
        if path not in entries:
            raise ValueFileError(f"missing value for {path or '<root>'}")
        used.add(path)
        return entries[path]

    def build(path: str, t: TypeExpr):
        if isinstance(t, Primitive):
            try:
                return parse_primitive(t.kind, take(path))
            except ValueTypeError as exc:
                raise ValueFileError(f"{path}: {exc}") from None
        if isinstance(t, Array):
            return ArrayValue([build(f"{path}[{i}]", t.element) for i in range(t.extent)])
        if isinstance(t, Pointer):
            if classify_pointer(t, registry) != SINGLE_OBJECT:
                return SkippedPointer()
            flag = take(path)
            if flag == "null":
                return MaybePointer(False)
            if flag != "present":
                raise ValueFileError(f"{path}: expected 'null' or 'present', got {flag!r}")
            return MaybePointer(True, build(path, t.pointee))
        if isinstance(t, Named):
            cls = _class(registry, t.name)
            if cls.kind == "union":
                literal = take(path)
                if not literal.startswith("blob:"):
                    raise ValueFileError(f"{path}: union values are written blob:<hex>")
                data = bytes.fromhex(literal[5:])
                if len(data) != union_size(cls, registry):
                    raise ValueFileError(f"{path}: union blob has wrong size")
                return UnionValue(data)
            rec = Record(cls.name)
            for b in cls.bases:
                rec.fields[b.name] = build(path, Named(b.name))
            for m in cls.data_members():
                rec.fields[m.name] = build(f"{path}.{m.name}", m.type)
            return rec
        raise ValueFileError(f"unsupported type {t!r}")

    value = build("", type_)
    extra = sorted(set(entries) - used)
    if extra:
        raise ValueFileError(f"unknown paths: {', '.join(extra)}")
    return value
