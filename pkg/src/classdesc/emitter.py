"""Descriptor plans and their rendering as C++ descriptor source.

A plan is the ordered list of calls a descriptor makes: one per base class,
then one per data member. The same plan renders for any action name.
"""

import re
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

from .model import (
    ARGC_ARGV,
    NO_ARGS,
    SINGLE_OBJECT,
    Array,
    ClassDecl,
    ModelError,
    Named,
    Pointer,
    TypeExpr,
    TypeRegistry,
    classify_pointer,
    union_size,
)

TCL_OBJ = "TCL_obj"
PTR_WARNING_HELPER = "classdesc_ptr_warning"
STRING_TYPE = "string"

_TOKEN_RE = re.compile(r'"(?:\\.|[^"\\])*"|[A-Za-z_0-9.]+|::|\S')


class PlanError(Exception):
    """No descriptor can be generated for a class."""


@dataclass(frozen=True)
class BaseCall:
    base: str
    access: str


@dataclass(frozen=True)
class MemberCall:
    member: str
    suffix: str
    type: TypeExpr
    is_function: bool = False


@dataclass(frozen=True)
class ArrayCall:
    member: str
    suffix: str
    element: TypeExpr
    extent: int


@dataclass(frozen=True)
class PointerWarn:
    member: str
    suffix: str
    kind: str  # generic | member-pointer


@dataclass(frozen=True)
class SingleObjectCall:
    member: str
    suffix: str
    pointee: str


@dataclass(frozen=True)
class UnionBlob:
    size: int


@dataclass(frozen=True)
class OmittedTypeCall:
    member: str
    suffix: str
    type_name: str


PlanStep = Union[BaseCall, MemberCall, ArrayCall, PointerWarn, SingleObjectCall, UnionBlob, OmittedTypeCall]


@dataclass(frozen=True)
class DescriptorPlan:
    class_name: str
    template_params: Tuple[str, ...] = ()
    steps: Tuple[PlanStep, ...] = ()
    template_param_decls: Tuple[str, ...] = ()
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    def member_names(self) -> List[str]:
        return [s.member for s in self.steps if hasattr(s, "member")]


def _check_named(name: str, cls: ClassDecl, member: str, registry: TypeRegistry, action: str) -> None:
    if name in registry.classes or name in cls.template_params or registry.is_omitted(name, action):
        return
    raise PlanError(
        f"no descriptor possible for member {member} of {cls.name}: type {name} is unknown"
    )


def _member_step(m, cls: ClassDecl, registry: TypeRegistry, action: str) -> PlanStep:
    suffix = "." + m.name
    t = m.type
    if isinstance(t, Pointer):
        kind = classify_pointer(t, registry)
        if kind == SINGLE_OBJECT:
            _check_named(t.pointee.name, cls, m.name, registry, action)
            return SingleObjectCall(m.name, suffix, t.pointee.name)
        return PointerWarn(m.name, suffix, kind)
    if isinstance(t, Array):
        elem = t.element
        if isinstance(elem, Pointer):
            kind = classify_pointer(elem, registry)
            if kind != SINGLE_OBJECT:
                return PointerWarn(m.name, suffix, kind)
            _check_named(elem.pointee.name, cls, m.name, registry, action)
        elif isinstance(elem, Named):
            _check_named(elem.name, cls, m.name, registry, action)
        return ArrayCall(m.name, suffix, elem, t.extent)
    if isinstance(t, Named):
        if t.name == "void":
            raise PlanError(f"member {m.name} of {cls.name} has type void")
        if registry.is_omitted(t.name, action):
            return OmittedTypeCall(m.name, suffix, t.name)
        _check_named(t.name, cls, m.name, registry, action)
    return MemberCall(m.name, suffix, t)


def plan(cls: ClassDecl, registry: TypeRegistry, action: str) -> DescriptorPlan:
    """Build the ordered step list for ``cls`` under ``action``."""
    steps: List[PlanStep] = []
    warnings: List[str] = []
    if cls.kind == "union":
        try:
            size = union_size(cls, registry)
        except ModelError as exc:
            raise PlanError(f"union {cls.name}: {exc}") from None
        steps.append(UnionBlob(size))
    else:
        for b in cls.bases:
            if b.virtual:
                raise PlanError(f"virtual base {b.name} of {cls.name} is not supported")
            if b.name not in registry.classes and not registry.is_omitted(b.name, action):
                warnings.append(f"base class {b.name} of {cls.name} has no visible definition")
            steps.append(BaseCall(b.name, b.access))
        for m in cls.members:
            if m.is_function:
                if action == TCL_OBJ and m.function_signature_class in (NO_ARGS, ARGC_ARGV):
                    steps.append(MemberCall(m.name, "." + m.name, m.type, is_function=True))
                continue
            if not m.serializable:
                continue
            steps.append(_member_step(m, cls, registry, action))
    return DescriptorPlan(
        cls.name, cls.template_params, tuple(steps), cls.template_param_decls, tuple(warnings)
    )


def _template_type(plan_: DescriptorPlan) -> str:
    if not plan_.template_params or "<" in plan_.class_name:
        return plan_.class_name
    return f"{plan_.class_name}<{','.join(plan_.template_params)}>"


def _step_line(step: PlanStep, action: str, class_type: str) -> str:
    if isinstance(step, BaseCall):
        return f"{action}(p,nm,({step.base})v);"
    if isinstance(step, MemberCall) and step.is_function:
        return f'{action}(p,nm+"{step.suffix}",v,&{class_type}::{step.member});'
    if isinstance(step, (MemberCall, SingleObjectCall, OmittedTypeCall)):
        return f'{action}(p,nm+"{step.suffix}",v.{step.member});'
    if isinstance(step, ArrayCall):
        return f'{action}(p,nm+"{step.suffix}",v.{step.member},{step.extent});'
    if isinstance(step, PointerWarn):
        return f'{PTR_WARNING_HELPER}(p,nm+"{step.suffix}");'
    if isinstance(step, UnionBlob):
        return f"{action}(p,nm,(char*)&v,{step.size});"
    raise TypeError(f"unknown plan step {step!r}")


def emit(plan_: DescriptorPlan, action: str) -> str:
    """Render the descriptor function for one plan."""
    class_type = _template_type(plan_)
    lines = []
    if plan_.template_params:
        decls = plan_.template_param_decls or tuple(f"class {n}" for n in plan_.template_params)
        lines.append(f"template <{','.join(decls)}>")
    lines.append(f"void {action}({action}_t *p, {STRING_TYPE} nm, {class_type}& v)")
    lines.append("{")
    for step in plan_.steps:
        lines.append("   " + _step_line(step, action, class_type))
    lines.append("}")
    return "\n".join(lines) + "\n"


def emit_file(plans: Sequence[DescriptorPlan], action: str) -> str:
    """A complete descriptor file: the action's base header, then each descriptor."""
    parts = [f'#include "{action}_base.h"\n']
    parts.extend(emit(p, action) for p in plans)
    return "\n".join(parts) if len(parts) > 1 else parts[0]


def emit_access_macros(actions: Sequence[str], string_type: str = STRING_TYPE) -> str:
    """Definitions of CLASSDESC_ACCESS and CLASSDESC_ACCESS_TEMPLATE."""
    if not actions:
        raise ValueError("at least one action is required")

    def block(macro: str, template: str) -> str:
        friends = [f"friend void {a}{template}({a}_t *,{string_type},type&);" for a in actions]
        body = "\\\n".join(friends)
        return f"#define {macro}(type)\\\n{body}\n"

    return block("CLASSDESC_ACCESS", "") + "\n" + block("CLASSDESC_ACCESS_TEMPLATE", "<>")


def plans_for(classes: Sequence[ClassDecl], registry: TypeRegistry, action: str) -> List[DescriptorPlan]:
    """Plans for every class not omitted under ``action``, in the given order."""
    return [plan(c, registry, action) for c in classes if not registry.is_omitted(c.name, action)]


def normalize(text: str) -> List[str]:
    """Whitespace-insensitive token list for structural comparison of C++ text."""
    return _TOKEN_RE.findall(text)
