import os
import re
from pathlib import Path

import pytest

from classdesc.emitter import (
    ArrayCall,
    BaseCall,
    MemberCall,
    OmittedTypeCall,
    PlanError,
    PointerWarn,
    SingleObjectCall,
    UnionBlob,
    emit,
    emit_access_macros,
    emit_file,
    normalize,
    plan,
    plans_for,
)
from classdesc.model import Primitive, build_registry
from classdesc.parser import CLASS_DECL, parse_source

GOLDEN = Path(__file__).parent / "golden"
UPDATE = os.environ.get("CLASSDESC_UPDATE_GOLDEN") == "1"


def load(source):
    decls, diags = parse_source(source)
    assert not [d for d in diags if d.severity == "error"], diags
    reg, diags = build_registry(decls)
    assert diags == []
    return reg


@pytest.fixture
def test1_registry():
    return load((GOLDEN / "test1.h").read_text())


def test_plan_for_listing_class(test1_registry):
    p = plan(test1_registry.classes["test1"], test1_registry, "pack")
    assert p.steps == (
        BaseCall("base_t", "private"),
        MemberCall("x", ".x", Primitive("int32")),
        MemberCall("y", ".y", Primitive("int32")),
        ArrayCall("z", ".z", Primitive("float64"), 100),
    )


def test_listing_reproduced_token_for_token(test1_registry):
    p = plan(test1_registry.classes["test1"], test1_registry, "pack")
    text = emit_file([p], "pack")
    assert normalize(text) == normalize((GOLDEN / "listing_pack.txt").read_text())
    assert 'pack(p,nm+".z",v.z,100);' in text
    assert "pack(p,nm,(base_t)v);" in text


def test_empty_class():
    reg = load("class E {};")
    p = plan(reg.classes["E"], reg, "pack")
    assert p.steps == ()
    assert emit(p, "pack") == "void pack(pack_t *p, string nm, E& v)\n{\n}\n"


def test_generic_pointer_becomes_warning_step():
    reg = load("class S { char *s; };")
    p = plan(reg.classes["S"], reg, "pack")
    assert p.steps == (PointerWarn("s", ".s", "generic"),)
    assert 'classdesc_ptr_warning(p,nm+".s");' in emit(p, "pack")


def test_action_substitution(test1_registry):
    cls = test1_registry.classes["test1"]
    packed = emit(plan(cls, test1_registry, "pack"), "pack")
    unpacked = emit(plan(cls, test1_registry, "unpack"), "unpack")
    assert unpacked == packed.replace("pack", "unpack")


def test_action_symmetry_on_mixed_header():
    reg = load((GOLDEN / "mixed.h").read_text())
    for cls in reg.classes.values():
        for a, b in [("pack", "unpack"), ("unpack", "dump")]:
            ta = emit(plan(cls, reg, a), a)
            tb = emit(plan(cls, reg, b), b)
            assert re.sub(rf"\b{a}(_t)?\b", lambda m: b + (m.group(1) or ""), ta) == tb


def test_order_preserved():
    reg = load("struct S { int c; double a[2]; char b; static int s; void f(); short d; };")
    p = plan(reg.classes["S"], reg, "pack")
    assert p.member_names() == ["c", "a", "b", "d"]
    text = emit(p, "pack")
    assert re.findall(r'nm\+"\.(\w+)"', text) == ["c", "a", "b", "d"]


def test_bases_precede_members_in_declaration_order():
    reg = load("struct A {}; struct B {}; struct D : A, B { int x; };")
    steps = plan(reg.classes["D"], reg, "pack").steps
    assert steps == (BaseCall("A", "public"), BaseCall("B", "public"), MemberCall("x", ".x", Primitive("int32")))


def test_mixed_plan_steps():
    reg = load((GOLDEN / "mixed.h").read_text())
    steps = plan(reg.classes["widget"], reg, "pack").steps
    assert steps == (
        BaseCall("base_t", "public"),
        MemberCall("count", ".count", Primitive("int32")),
        PointerWarn("label", ".label", "generic"),
        PointerWarn("selector", ".selector", "member-pointer"),
        SingleObjectCall("head", ".head", "node"),
        OmittedTypeCall("payload", ".payload", "blob_t"),
        ArrayCall("grid", ".grid", Primitive("float32"), 6),
    )
    assert plan(reg.classes["number"], reg, "pack").steps == (UnionBlob(8),)


def test_unknown_member_type_without_omit_is_an_error():
    reg = load("#pragma omit pack blob_t\nstruct W { blob_t b; };")
    assert plan(reg.classes["W"], reg, "pack").steps == (OmittedTypeCall("b", ".b", "blob_t"),)
    # omitted for pack only
    with pytest.raises(PlanError, match="no descriptor possible"):
        plan(reg.classes["W"], reg, "unpack")


def test_virtual_base_is_rejected():
    reg = load("struct A {}; struct B : virtual A {};")
    with pytest.raises(PlanError, match="virtual"):
        plan(reg.classes["B"], reg, "pack")


def test_unknown_base_only_warns(test1_registry):
    p = plan(test1_registry.classes["test1"], test1_registry, "pack")
    assert p.warnings and "base_t" in p.warnings[0]


def test_tcl_obj_registers_eligible_functions():
    reg = load((GOLDEN / "mixed.h").read_text())
    p = plan(reg.classes["widget"], reg, "TCL_obj")
    fns = [s.member for s in p.steps if isinstance(s, MemberCall) and s.is_function]
    assert fns == ["refresh", "command"]
    text = emit(p, "TCL_obj")
    assert 'TCL_obj(p,nm+".refresh",v,&widget::refresh);' in text
    assert "other" not in text


def test_template_rendering():
    reg = load((GOLDEN / "mixed.h").read_text())
    text = emit(plan(reg.classes["holder"], reg, "pack"), "pack")
    assert text.startswith("template <class T,int N>\nvoid pack(pack_t *p, string nm, holder<T,N>& v)\n")
    assert 'pack(p,nm+".item",v.item);' in text


def test_access_macros_match_listing():
    text = emit_access_macros(["pack", "unpack"])
    listing = (GOLDEN / "listing_access.txt").read_text().replace("eco_string", "string")
    assert normalize(text) == normalize(listing)


def test_access_macros_single_action():
    text = emit_access_macros(["pack"])
    assert text.count("friend") == 2
    assert "friend void pack(pack_t *,string,type&);\n" in text


def test_access_macros_line_count():
    text = emit_access_macros(["pack", "unpack", "TCL_obj"])
    blocks = text.strip().split("\n\n")
    assert [b.count("friend void") for b in blocks] == [3, 3]
    assert "friend void TCL_obj<>(TCL_obj_t *,string,type&);" in blocks[1]


def test_access_macros_need_an_action():
    with pytest.raises(ValueError):
        emit_access_macros([])


def test_emission_is_deterministic():
    src = (GOLDEN / "mixed.h").read_text()
    outs = []
    for _ in range(2):
        reg = load(src)
        outs.append(emit_file(plans_for(list(reg.classes.values()), reg, "pack"), "pack"))
    assert outs[0] == outs[1]


@pytest.mark.parametrize("header,action", [("test1.h", "pack"), ("mixed.h", "pack"), ("mixed.h", "TCL_obj")])
def test_golden_files(header, action):
    src = (GOLDEN / header).read_text()
    decls, _ = parse_source(src)
    reg, _ = build_registry(decls)
    order = [d.payload.name for d in decls if d.variant == CLASS_DECL]
    text = emit_file(plans_for([reg.classes[n] for n in order], reg, action), action)
    golden = GOLDEN / f"{Path(header).stem}.{action}.cd"
    if UPDATE or not golden.exists():
        golden.write_text(text)
    assert text == golden.read_text()
