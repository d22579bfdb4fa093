"""Declaration model and the resolved type registry."""

from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

from .diagnostics import ERROR, Diagnostic

ALL_ACTIONS = "*"

GENERIC = "generic"
MEMBER_POINTER = "member-pointer"
SINGLE_OBJECT = "single-object"

PUBLIC, PRIVATE, PROTECTED = "public", "private", "protected"

NO_SIGNATURE, NO_ARGS, ARGC_ARGV = "none", "no-args", "argc-argv"

# kind -> native byte width
PRIMITIVE_WIDTHS = {
    "bool": 1,
    "char": 1,
    "int8": 1,
    "int16": 2,
    "int32": 4,
    "int64": 8,
    "uint8": 1,
    "uint16": 2,
    "uint32": 4,
    "uint64": 8,
    "float32": 4,
    "float64": 8,
}

# spellings accepted as ready-made primitives
FIXED_WIDTH_NAMES = {
    "int8_t": "int8",
    "int16_t": "int16",
    "int32_t": "int32",
    "int64_t": "int64",
    "uint8_t": "uint8",
    "uint16_t": "uint16",
    "uint32_t": "uint32",
    "uint64_t": "uint64",
    "std::int8_t": "int8",
    "std::int16_t": "int16",
    "std::int32_t": "int32",
    "std::int64_t": "int64",
    "std::uint8_t": "uint8",
    "std::uint16_t": "uint16",
    "std::uint32_t": "uint32",
    "std::uint64_t": "uint64",
}


class ModelError(Exception):
    pass


@dataclass(frozen=True)
class Primitive:
    kind: str

    def __post_init__(self):
        if self.kind not in PRIMITIVE_WIDTHS:
            raise ModelError(f"unknown primitive kind {self.kind!r}")


@dataclass(frozen=True)
class Named:
    name: str


@dataclass(frozen=True)
class Array:
    element: "TypeExpr"
    extent: int

    def __post_init__(self):
        if self.extent < 1:
            raise ModelError(f"array extent must be positive, got {self.extent}")


@dataclass(frozen=True)
class Pointer:
    """A pointer declarator.

    ``pointee`` is None when unknown (function pointers). ``member_of`` is
    set for ``T C::*`` syntax. ``via_typedef`` records that the pointer
    was hidden behind a typedef name.
    """

    pointee: Optional["TypeExpr"]
    member_of: Optional[str] = None
    function: bool = False
    via_typedef: bool = False


TypeExpr = Union[Primitive, Named, Array, Pointer]


@dataclass(frozen=True)
class Base:
    name: str
    access: str
    virtual: bool = False


@dataclass(frozen=True)
class Member:
    name: str
    type: TypeExpr
    access: str
    serializable: bool = True
    is_function: bool = False
    function_signature_class: str = NO_SIGNATURE
    is_static: bool = False
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    kind: str  # class | struct | union
    template_params: Tuple[str, ...] = ()
    bases: Tuple[Base, ...] = ()
    members: Tuple[Member, ...] = ()
    has_private_or_protected: bool = False
    # "class T", "int N", ... parallel to template_params
    template_param_decls: Tuple[str, ...] = ()
    file: Optional[str] = field(default=None, compare=False)
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    @property
    def is_template(self) -> bool:
        return bool(self.template_params)

    def data_members(self) -> List[Member]:
        return [m for m in self.members if m.serializable and not m.is_function]


@dataclass(frozen=True)
class TypeRegistry:
    classes: Dict[str, ClassDecl] = field(default_factory=dict)
    typedefs: Dict[str, TypeExpr] = field(default_factory=dict)
    omit_set: FrozenSet[Tuple[str, str]] = frozenset()
    single_object_set: FrozenSet[str] = frozenset()

    def is_omitted(self, type_name: str, action: str) -> bool:
        return (ALL_ACTIONS, type_name) in self.omit_set or (action, type_name) in self.omit_set

    def lookup_class(self, name: str) -> ClassDecl:
        try:
            return self.classes[name]
        except KeyError:
            raise ModelError(f"no class named {name!r} in registry") from None


def mark_single_object(registry: TypeRegistry, type_name: str) -> TypeRegistry:
    """Flag ``type_name`` as only ever pointed to by null-or-one-object pointers."""
    if type_name in registry.single_object_set:
        return registry
    return replace(registry, single_object_set=registry.single_object_set | {type_name})


def classify_pointer(expr: Pointer, registry: TypeRegistry) -> str:
    if not isinstance(expr, Pointer):
        raise ModelError("classify_pointer needs a pointer type")
    if expr.member_of is not None:
        return MEMBER_POINTER
    if expr.function or expr.via_typedef:
        # function and object pointers cannot be told apart behind a typedef
        return GENERIC
    if isinstance(expr.pointee, Named) and expr.pointee.name in registry.single_object_set:
        return SINGLE_OBJECT
    return GENERIC


# --------------------------------------------------------------------------
# resolution


def _scopes(class_name: Optional[str]) -> List[str]:
    if not class_name:
        return [""]
    parts = class_name.split("::")
    return ["::".join(parts[:i]) for i in range(len(parts), -1, -1)]


class _Resolver:
    def __init__(self, classes, typedefs, diags):
        self.classes = classes
        self.typedefs = typedefs
        self.diags = diags
        self.done: Dict[str, TypeExpr] = {}
        self.active: List[str] = []
        self.broken = set()

    def find(self, name: str, scope: Optional[str]) -> Optional[str]:
        if name.startswith("::"):
            name = name[2:]
            scope = None
        for prefix in _scopes(scope):
            qual = f"{prefix}::{name}" if prefix else name
            if qual in self.classes or qual in self.typedefs:
                return qual
        return None

    def typedef(self, name: str) -> Optional[TypeExpr]:
        if name in self.done:
            return self.done[name]
        if name in self.broken:
            return None
        if name in self.active:
            cycle = self.active[self.active.index(name):] + [name]
            self.diags.append(
                Diagnostic(ERROR, "typedef cycle: " + " -> ".join(cycle), 0, 0)
            )
            self.broken.update(cycle)
            return None
        self.active.append(name)
        scope = name.rpartition("::")[0] or None
        out = self.expr(self.typedefs[name], scope, ())
        self.active.pop()
        if name in self.broken:
            return None
        self.done[name] = out
        return out

    def expr(self, e: TypeExpr, scope: Optional[str], tparams) -> TypeExpr:
        if isinstance(e, Primitive):
            return e
        if isinstance(e, Named):
            if e.name in tparams:
                return e
            if e.name in FIXED_WIDTH_NAMES:
                return Primitive(FIXED_WIDTH_NAMES[e.name])
            qual = self.find(e.name, scope)
            if qual is None:
                return e
            if qual in self.classes:
                return Named(qual)
            target = self.typedef(qual)
            if target is None:
                return e
            if isinstance(target, Pointer):
                return replace(target, via_typedef=True)
            return target
        if isinstance(e, Array):
            element = self.expr(e.element, scope, tparams)
            if isinstance(element, Array):
                return Array(element.element, element.extent * e.extent)
            return Array(element, e.extent)
        if isinstance(e, Pointer):
            pointee = None if e.pointee is None else self.expr(e.pointee, scope, tparams)
            member_of = e.member_of
            if member_of is not None:
                found = self.find(member_of, scope)
                if found is not None and found in self.classes:
                    member_of = found
            return replace(e, pointee=pointee, member_of=member_of)
        raise ModelError(f"not a type expression: {e!r}")

    def base_name(self, name: str, scope: str) -> str:
        qual = self.find(name, scope)
        if qual is None:
            return name
        if qual in self.classes:
            return qual
        target = self.typedef(qual)
        if isinstance(target, Named):
            return target.name
        return name


def resolve(registry: TypeRegistry) -> Tuple[TypeRegistry, List[Diagnostic]]:
    """Resolve typedef chains and qualify names. Idempotent."""
    diags: List[Diagnostic] = []
    r = _Resolver(registry.classes, registry.typedefs, diags)
    typedefs = {}
    for name in registry.typedefs:
        out = r.typedef(name)
        typedefs[name] = registry.typedefs[name] if out is None else out
    classes = {}
    for name, cls in registry.classes.items():
        tparams = set(cls.template_params)
        members = tuple(
            m if m.is_function else replace(m, type=r.expr(m.type, name, tparams))
            for m in cls.members
        )
        bases = tuple(replace(b, name=r.base_name(b.name, name)) for b in cls.bases)
        classes[name] = replace(cls, members=members, bases=bases)
    return replace(registry, classes=classes, typedefs=typedefs), diags


def build_registry(decls, single_objects=()) -> Tuple[TypeRegistry, List[Diagnostic]]:
    """Collect raw declarations (possibly from several files) into a registry."""
    from .parser import CLASS_DECL, OMIT_PRAGMA, SINGLE_OBJECT_PRAGMA, TYPEDEF_DECL

    diags: List[Diagnostic] = []
    classes: Dict[str, ClassDecl] = {}
    typedefs: Dict[str, TypeExpr] = {}
    omit = set()
    single = set(single_objects)
    for d in decls:
        if d.variant == CLASS_DECL:
            cls = d.payload
            old = classes.get(cls.name)
            if old is not None and old != cls:
                diags.append(Diagnostic(
                    ERROR, f"class {cls.name} redefined with a different body",
                    cls.line, cls.column, cls.file))
                continue
            if old is None:
                classes[cls.name] = cls
        elif d.variant == TYPEDEF_DECL:
            td = d.payload
            old = typedefs.get(td.name)
            if old is not None and old != td.type:
                diags.append(Diagnostic(
                    ERROR, f"typedef {td.name} redefined differently", d.start[0], d.start[1], d.file))
                continue
            typedefs[td.name] = td.type
        elif d.variant == OMIT_PRAGMA:
            omit.add((d.payload.action or ALL_ACTIONS, d.payload.type_name))
        elif d.variant == SINGLE_OBJECT_PRAGMA:
            single.add(d.payload.type_name)
    reg = TypeRegistry(classes, typedefs, frozenset(omit), frozenset(single))
    reg, more = resolve(reg)
    return reg, diags + more


def native_size(t: TypeExpr, registry: TypeRegistry) -> int:
    """Encoded size in native mode for pointer-free types (unions use blob size)."""
    if isinstance(t, Primitive):
        return PRIMITIVE_WIDTHS[t.kind]
    if isinstance(t, Array):
        return t.extent * native_size(t.element, registry)
    if isinstance(t, Named):
        cls = registry.lookup_class(t.name)
        if cls.kind == "union":
            return union_size(cls, registry)
        total = sum(native_size(Named(b.name), registry) for b in cls.bases)
        for m in cls.data_members():
            if isinstance(m.type, Pointer):
                raise ModelError(f"member {m.name} of {cls.name} is a pointer; size is value dependent")
            total += native_size(m.type, registry)
        return total
    raise ModelError(f"no fixed size for {t!r}")


def union_size(cls: ClassDecl, registry: TypeRegistry) -> int:
    sizes = [native_size(m.type, registry) for m in cls.data_members()]
    return max(sizes, default=0)


# --------------------------------------------------------------------------
# IR export / import

IR_VERSION = 1


def type_to_ir(t: TypeExpr) -> dict:
    if isinstance(t, Primitive):
        return {"variant": "primitive", "kind": t.kind}
    if isinstance(t, Named):
        return {"variant": "named", "name": t.name}
    if isinstance(t, Array):
        return {"variant": "array", "element": type_to_ir(t.element), "extent": t.extent}
    if isinstance(t, Pointer):
        return {
            "variant": "pointer",
            "pointee": None if t.pointee is None else type_to_ir(t.pointee),
            "member_of": t.member_of,
            "function": t.function,
            "via_typedef": t.via_typedef,
        }
    raise ModelError(f"not a type expression: {t!r}")


def type_from_ir(d: dict) -> TypeExpr:
    v = d["variant"]
    if v == "primitive":
        return Primitive(d["kind"])
    if v == "named":
        return Named(d["name"])
    if v == "array":
        return Array(type_from_ir(d["element"]), int(d["extent"]))
    if v == "pointer":
        pointee = d.get("pointee")
        return Pointer(
            None if pointee is None else type_from_ir(pointee),
            d.get("member_of"),
            bool(d.get("function", False)),
            bool(d.get("via_typedef", False)),
        )
    raise ModelError(f"unknown type variant {v!r}")


def registry_to_ir(reg: TypeRegistry) -> dict:
    classes = []
    for cls in reg.classes.values():
        classes.append({
            "name": cls.name,
            "kind": cls.kind,
            "template_params": list(cls.template_params),
            "template_param_decls": list(cls.template_param_decls),
            "bases": [{"name": b.name, "access": b.access, "virtual": b.virtual} for b in cls.bases],
            "members": [
                {
                    "name": m.name,
                    "type": type_to_ir(m.type),
                    "access": m.access,
                    "serializable": m.serializable,
                    "is_function": m.is_function,
                    "function_signature_class": m.function_signature_class,
                    "is_static": m.is_static,
                }
                for m in cls.members
            ],
            "has_private_or_protected": cls.has_private_or_protected,
            "file": cls.file,
        })
    return {
        "ir_version": IR_VERSION,
        "classes": classes,
        "typedefs": {k: type_to_ir(v) for k, v in reg.typedefs.items()},
        "omit_set": sorted([a, n] for a, n in reg.omit_set),
        "single_object_set": sorted(reg.single_object_set),
    }


def registry_from_ir(ir: dict) -> TypeRegistry:
    if ir.get("ir_version") != IR_VERSION:
        raise ModelError(f"unsupported ir_version {ir.get('ir_version')!r}")
    classes = {}
    for c in ir["classes"]:
        classes[c["name"]] = ClassDecl(
            name=c["name"],
            kind=c["kind"],
            template_params=tuple(c["template_params"]),
            bases=tuple(Base(b["name"], b["access"], b["virtual"]) for b in c["bases"]),
            members=tuple(
                Member(
                    m["name"], type_from_ir(m["type"]), m["access"], m["serializable"],
                    m["is_function"], m["function_signature_class"], m.get("is_static", False),
                )
                for m in c["members"]
            ),
            has_private_or_protected=c["has_private_or_protected"],
            template_param_decls=tuple(c.get("template_param_decls", ())),
            file=c.get("file"),
        )
    return TypeRegistry(
        classes,
        {k: type_from_ir(v) for k, v in ir["typedefs"].items()},
        frozenset((a, n) for a, n in ir["omit_set"]),
        frozenset(ir["single_object_set"]),
    )
