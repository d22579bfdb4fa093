import random

import pytest

from classdesc.model import Named
from classdesc.runtime import ArrayValue, MaybePointer, Prim, Record, SkippedPointer, UnionValue
from classdesc.valuefile import ValueFileError, dumps, loads, parse_lines

from shapes import random_header, random_value, registry_for

HEADER = """
struct base_t { short s; };
struct node { int val; node *next; };
#pragma single_obj_ptr node
union U { int i; char c[6]; };
class C : public base_t {
  bool on;
  float f[2];
  node *head;
  U u;
  char *skip;
};
"""


def sample():
    return Record("C", {
        "base_t": Record("base_t", {"s": Prim("int16", -3)}),
        "on": Prim("bool", True),
        "f": ArrayValue([Prim("float32", 0.5), Prim("float32", -1.0)]),
        "head": MaybePointer(True, Record("node", {"val": Prim("int32", 9), "next": MaybePointer(False)})),
        "u": UnionValue(b"\x01\x02\x03\x04\x05\x06"),
        "skip": SkippedPointer(),
    })


def test_dump_layout():
    reg = registry_for(HEADER)
    assert dumps(sample(), Named("C"), reg) == (
        ".s = -3\n"
        ".on = 1\n"
        ".f[0] = 0.5\n"
        ".f[1] = -1.0\n"
        ".head = present\n"
        ".head.val = 9\n"
        ".head.next = null\n"
        ".u = blob:010203040506\n"
    )


def test_round_trip_text():
    reg = registry_for(HEADER)
    text = dumps(sample(), Named("C"), reg)
    assert loads(text, Named("C"), reg) == sample()


def test_comments_blank_lines_and_bare_paths():
    entries = parse_lines("# header\n\nx = 3\n.y=4\n")
    assert entries == {".x": "3", ".y": "4"}


@pytest.mark.parametrize("text,match", [
    ("x = 1\nx = 2\n", "duplicate"),
    ("x 1\n", "expected"),
])
def test_malformed_lines(text, match):
    with pytest.raises(ValueFileError, match=match):
        parse_lines(text)


def test_missing_and_unknown_paths():
    reg = registry_for("struct P { int a; int b; };")
    with pytest.raises(ValueFileError, match="missing value for .b"):
        loads(".a = 1\n", Named("P"), reg)
    with pytest.raises(ValueFileError, match="unknown paths: .c"):
        loads(".a = 1\n.b = 2\n.c = 3\n", Named("P"), reg)
    with pytest.raises(ValueFileError, match=".a"):
        loads(".a = one\n.b = 2\n", Named("P"), reg)


def test_bad_pointer_flag_and_union_size():
    reg = registry_for(HEADER)
    text = dumps(sample(), Named("C"), reg)
    with pytest.raises(ValueFileError, match="null"):
        loads(text.replace(".head = present", ".head = maybe"), Named("C"), reg)
    with pytest.raises(ValueFileError, match="size"):
        loads(text.replace("blob:010203040506", "blob:01"), Named("C"), reg)


def test_shadowed_base_member_is_ambiguous():
    reg = registry_for("struct A { int x; }; struct B : A { int x; };")
    v = Record("B", {"A": Record("A", {"x": Prim("int32", 1)}), "x": Prim("int32", 2)})
    with pytest.raises(ValueFileError, match="ambiguous"):
        dumps(v, Named("B"), reg)


@pytest.mark.parametrize("seed", range(25))
def test_random_shapes_round_trip_through_text(seed):
    rng = random.Random(seed)
    source, root = random_header(rng)
    reg = registry_for(source)
    v = random_value(rng, Named(root), reg)
    try:
        text = dumps(v, Named(root), reg)
    except ValueFileError as exc:
        # derived and base both declare m0, m1, ... so some shapes collide
        assert "ambiguous" in str(exc)
        return
    assert loads(text, Named(root), reg) == v
