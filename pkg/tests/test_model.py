import json

import pytest

from classdesc.model import (
    GENERIC,
    MEMBER_POINTER,
    SINGLE_OBJECT,
    Array,
    ModelError,
    Named,
    Pointer,
    Primitive,
    TypeRegistry,
    build_registry,
    classify_pointer,
    mark_single_object,
    native_size,
    registry_from_ir,
    registry_to_ir,
    resolve,
)
from classdesc.parser import parse_source


def registry(source, **kw):
    decls, diags = parse_source(source)
    assert not [d for d in diags if d.severity == "error"], diags
    return build_registry(decls, **kw)


def test_empty_registry():
    reg, diags = build_registry([])
    assert reg == TypeRegistry()
    assert diags == []


def test_listing_class_registered():
    reg, diags = registry("class test1: base_t { int x,y; public: double z[100]; };")
    assert list(reg.classes) == ["test1"]
    assert reg.omit_set == frozenset()
    assert diags == []


def test_typedef_resolves_to_primitive():
    reg, _ = registry("typedef int myint; class C { myint a; };")
    assert reg.classes["C"].members[0].type == Primitive("int32")


def test_typedef_chains_and_arrays():
    reg, _ = registry("typedef int row[3]; typedef row grid[2]; typedef grid G; struct S { G g; };")
    assert reg.classes["S"].members[0].type == Array(Primitive("int32"), 6)


def test_typedef_to_class_and_scope_lookup():
    reg, _ = registry("""
        struct A { int a; };
        typedef A AA;
        struct O { typedef double real; real r; AA x; struct I { int q; }; I i; };
    """)
    types = [m.type for m in reg.classes["O"].members]
    assert types == [Primitive("float64"), Named("A"), Named("O::I")]


def test_typedef_cycle_is_diagnosed():
    reg, diags = registry("typedef B A; typedef A B; struct S { A a; };")
    assert any(d.severity == "error" and "cycle" in d.message for d in diags)
    # unresolvable name stays named
    assert reg.classes["S"].members[0].type == Named("A")


def test_duplicate_class_with_different_body():
    reg, diags = registry("struct S { int a; }; struct S { int b; };")
    assert [d.severity for d in diags] == ["error"]
    assert reg.classes["S"].members[0].name == "a"


def test_identical_redefinition_is_fine():
    d1, _ = parse_source("struct S { int a; };", "one.h")
    d2, _ = parse_source("struct S { int a; };", "two.h")
    reg, diags = build_registry(d1 + d2)
    assert diags == []
    assert list(reg.classes) == ["S"]


def test_stdint_names():
    reg, _ = registry("struct S { uint8_t a; int64_t b; };")
    assert [m.type for m in reg.classes["S"].members] == [Primitive("uint8"), Primitive("int64")]


def test_classify_member_pointer():
    reg, _ = registry("struct C { int a; }; struct D { int C::*mp; };")
    assert classify_pointer(reg.classes["D"].members[0].type, reg) == MEMBER_POINTER


def test_classify_single_object_by_membership():
    reg, _ = registry("struct node { int v; node *next; };")
    ptr = reg.classes["node"].members[1].type
    assert classify_pointer(ptr, reg) == GENERIC
    reg = mark_single_object(reg, "node")
    assert classify_pointer(ptr, reg) == SINGLE_OBJECT


def test_function_pointer_behind_typedef_is_generic():
    reg, _ = registry("typedef void (*cb)(int); struct S { cb f; };", single_objects=["cb"])
    ptr = reg.classes["S"].members[0].type
    assert isinstance(ptr, Pointer)
    assert classify_pointer(ptr, reg) == GENERIC


def test_object_pointer_behind_typedef_is_generic():
    reg, _ = registry("struct node { int v; }; typedef node *np; struct S { np p; node *q; };",
                      single_objects=["node"])
    p, q = (m.type for m in reg.classes["S"].members)
    assert classify_pointer(p, reg) == GENERIC
    assert classify_pointer(q, reg) == SINGLE_OBJECT


def test_single_object_pragma():
    reg, _ = registry("#pragma single_obj_ptr node\nstruct node { node *next; };")
    assert reg.single_object_set == {"node"}


def test_classify_requires_pointer():
    with pytest.raises(ModelError):
        classify_pointer(Primitive("int32"), TypeRegistry())


def test_mark_single_object_idempotent():
    reg, _ = registry("struct node { node *n; };")
    once = mark_single_object(reg, "node")
    assert mark_single_object(once, "node") == once
    unused = mark_single_object(reg, "never_used")
    assert unused.classes == reg.classes


def test_omit_set():
    reg, _ = registry("#pragma omit pack mytype\n#pragma omit other\n")
    assert reg.omit_set == {("pack", "mytype"), ("*", "other")}
    assert reg.is_omitted("mytype", "pack")
    assert not reg.is_omitted("mytype", "unpack")
    assert reg.is_omitted("other", "TCL_obj")


def test_union_invariants():
    reg, _ = registry("union U { char c; double d; int i[3]; };")
    u = reg.classes["U"]
    assert u.bases == ()
    assert all(m.access == "public" for m in u.members)
    assert native_size(Named("U"), reg) == 12


SAMPLE = """
#pragma omit pack mytype
#pragma single_obj_ptr node
typedef int myint;
typedef void (*cb)(int);
struct node { myint v; node *next; cb f; };
class test1: base_t { int x,y; public: double z[100]; int C::*mp; };
template <class T> class V { T d[4]; };
union U { char c; float f; };
struct O { struct I { short s; } i; static int k; void go(); };
"""


def test_resolution_idempotent():
    reg, _ = registry(SAMPLE)
    again, diags = resolve(reg)
    assert diags == []
    assert again == reg


def test_ir_round_trip_is_identity():
    reg, _ = registry(SAMPLE)
    ir = registry_to_ir(reg)
    text = json.dumps(ir, sort_keys=True)
    back = registry_from_ir(json.loads(text))
    assert back == reg
    assert resolve(back)[0] == reg
    assert ir["ir_version"] == 1


def test_ir_version_checked():
    with pytest.raises(ModelError):
        registry_from_ir({"ir_version": 99})
