"""Object descriptor generation and schema-driven serialization for C++ declarations."""

from .emitter import DescriptorPlan, PlanError, emit, emit_access_macros, plan
from .lexer import Token, tokenize
from .model import (
    Array,
    ClassDecl,
    Member,
    Named,
    Pointer,
    Primitive,
    TypeRegistry,
    build_registry,
    classify_pointer,
    mark_single_object,
)
from .parser import RawDecl, parse_source, parse_unit
from .rewriter import fix_headers, insert_access_macros
from .runtime import (
    NATIVE,
    XDR,
    PackBuffer,
    bind_members,
    encode_primitive,
    pack,
    stream_pack,
    unpack,
)

__version__ = "0.1.0"

__all__ = [
    "Array", "ClassDecl", "DescriptorPlan", "Member", "NATIVE", "Named", "PackBuffer", "PlanError",
    "Pointer", "Primitive", "RawDecl", "Token", "TypeRegistry", "XDR", "bind_members", "build_registry",
    "classify_pointer", "emit", "emit_access_macros", "encode_primitive", "fix_headers",
    "insert_access_macros", "mark_single_object", "pack", "parse_source", "parse_unit", "plan",
    "stream_pack", "tokenize", "unpack",
]
