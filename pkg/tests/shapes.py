"""Random class shapes and conforming values for round-trip testing."""

import random
import struct

from classdesc.model import PRIMITIVE_WIDTHS, Array, Named, Pointer, Primitive, build_registry
from classdesc.parser import parse_source
from classdesc.runtime import ArrayValue, MaybePointer, Prim, Record, SkippedPointer

# C spellings and the primitive each must resolve to
SPELLINGS = [
    ("bool", "bool"),
    ("char", "char"),
    ("signed char", "int8"),
    ("unsigned char", "uint8"),
    ("short", "int16"),
    ("unsigned short", "uint16"),
    ("int", "int32"),
    ("unsigned", "uint32"),
    ("unsigned int", "uint32"),
    ("long", "int64"),
    ("long long", "int64"),
    ("unsigned long", "uint64"),
    ("float", "float32"),
    ("double", "float64"),
    ("int16_t", "int16"),
    ("uint64_t", "uint64"),
]

MAX_DEPTH = 4
MAX_MEMBERS = 8
MAX_EXTENT = 16


def random_header(rng: random.Random, tag: str = "S"):
    """Source text for a random family of structs; returns (source, root name).

    Classes at level k only reference classes at deeper levels, so every
    value tree is finite and nesting depth stays within MAX_DEPTH.
    """
    levels = rng.randint(1, MAX_DEPTH)
    by_level = []
    lines = []
    counter = 0
    for level in reversed(range(levels)):
        names = []
        for _ in range(rng.randint(1, 2)):
            name = f"{tag}{counter}"
            counter += 1
            names.append(name)
            deeper = [n for lv in by_level for n in lv]
            bases = []
            if deeper and rng.random() < 0.25:
                bases.append(rng.choice(deeper))
            members = []
            for i in range(rng.randint(0, MAX_MEMBERS)):
                roll = rng.random()
                mname = f"m{i}"
                if deeper and roll < 0.2:
                    members.append(f"{rng.choice(deeper)} {mname};")
                elif deeper and roll < 0.3:
                    members.append(f"{rng.choice(deeper)} *{mname};")
                elif deeper and roll < 0.35:
                    members.append(f"{rng.choice(deeper)} {mname}[{rng.randint(1, 4)}];")
                elif roll < 0.55:
                    spelling = rng.choice(SPELLINGS)[0]
                    members.append(f"{spelling} {mname}[{rng.randint(1, MAX_EXTENT)}];")
                else:
                    members.append(f"{rng.choice(SPELLINGS)[0]} {mname};")
            keyword = rng.choice(["struct", "class"])
            head = f"{keyword} {name}" + (f" : public {bases[0]}" if bases else "")
            body = "\n".join("  " + m for m in members)
            access = "public:\n" if keyword == "class" and rng.random() < 0.5 else ""
            lines.append(f"#pragma single_obj_ptr {name}")
            lines.append(f"{head} {{\n{access}{body}\n}};")
        by_level.append(names)
    root = by_level[-1][0]
    return "\n".join(lines) + "\n", root


def registry_for(source: str):
    decls, diags = parse_source(source, "shape.h")
    assert not [d for d in diags if d.severity == "error"], diags
    registry, diags = build_registry(decls)
    assert not diags, diags
    return registry


def random_primitive(rng: random.Random, kind: str) -> Prim:
    if kind == "bool":
        return Prim(kind, rng.random() < 0.5)
    if kind == "float32":
        bits = rng.getrandbits(32)
        x = struct.unpack("<f", struct.pack("<I", bits))[0]
        if x != x or x in (float("inf"), float("-inf")):
            x = 1.5
        return Prim(kind, x)
    if kind == "float64":
        bits = rng.getrandbits(64)
        x = struct.unpack("<d", struct.pack("<Q", bits))[0]
        if x != x or x in (float("inf"), float("-inf")):
            x = -2.25
        return Prim(kind, x)
    bits = PRIMITIVE_WIDTHS[kind] * 8
    if kind.startswith("uint"):
        lo, hi = 0, (1 << bits) - 1
    else:
        lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    return Prim(kind, rng.choice([lo, hi, 0, rng.randint(lo, hi)]))


def random_value(rng: random.Random, t, registry):
    if isinstance(t, Primitive):
        return random_primitive(rng, t.kind)
    if isinstance(t, Array):
        return ArrayValue([random_value(rng, t.element, registry) for _ in range(t.extent)])
    if isinstance(t, Pointer):
        if t.pointee is None or not (isinstance(t.pointee, Named) and t.pointee.name in registry.single_object_set):
            return SkippedPointer()
        if rng.random() < 0.5:
            return MaybePointer(False)
        return MaybePointer(True, random_value(rng, t.pointee, registry))
    cls = registry.classes[t.name]
    rec = Record(cls.name)
    for b in cls.bases:
        rec.fields[b.name] = random_value(rng, Named(b.name), registry)
    for m in cls.data_members():
        rec.fields[m.name] = random_value(rng, m.type, registry)
    return rec
