"""Recursive-descent parser for class/struct/union definitions and typedefs."""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .diagnostics import ERROR, WARNING, Diagnostic
from .lexer import EOF, IDENTIFIER, INTEGER, KEYWORD, LITERAL, PRAGMA, Token, integer_value, tokenize
from .model import (
    ARGC_ARGV,
    NO_ARGS,
    NO_SIGNATURE,
    PRIVATE,
    PROTECTED,
    PUBLIC,
    Array,
    Base,
    ClassDecl,
    Member,
    Named,
    Pointer,
    Primitive,
    TypeExpr,
)

CLASS_DECL = "class-decl"
TYPEDEF_DECL = "typedef-decl"
OMIT_PRAGMA = "omit-pragma"
SINGLE_OBJECT_PRAGMA = "single-object-pragma"

ACCESS_WORDS = (PUBLIC, PRIVATE, PROTECTED)
BUILTIN_WORDS = frozenset("unsigned signed short long int char bool float double void".split())
SPECIFIER_WORDS = frozenset("static const volatile mutable inline virtual explicit extern typename".split())
CV_WORDS = ("const", "volatile")
ACCESS_MACROS = ("CLASSDESC_ACCESS", "CLASSDESC_ACCESS_TEMPLATE")


@dataclass(frozen=True)
class Typedef:
    name: str
    type: TypeExpr


@dataclass(frozen=True)
class OmitPragma:
    action: Optional[str]  # None: every action
    type_name: str


@dataclass(frozen=True)
class SingleObjectPragma:
    type_name: str


@dataclass(frozen=True)
class RawDecl:
    variant: str
    payload: object
    start: Tuple[int, int] = field(default=(0, 0), compare=False)
    end: Tuple[int, int] = field(default=(0, 0), compare=False)
    file: Optional[str] = field(default=None, compare=False)


class _Unbalanced(Exception):
    def __init__(self, token: Token):
        self.token = token


class _Skip(Exception):
    """Abandon the current member declaration (diagnostic already issued)."""


def builtin_type(words: Sequence[str]) -> Optional[TypeExpr]:
    """Map a multiset of builtin type words to a primitive. None for void."""
    unsigned = "unsigned" in words
    longs = words.count("long")
    if "void" in words:
        return None
    if "bool" in words:
        return Primitive("bool")
    if "float" in words:
        return Primitive("float32")
    if "double" in words:
        if longs:
            raise ValueError("long double has no portable encoding")
        return Primitive("float64")
    if "char" in words:
        if unsigned:
            return Primitive("uint8")
        return Primitive("int8" if "signed" in words else "char")
    prefix = "uint" if unsigned else "int"
    if "short" in words:
        return Primitive(prefix + "16")
    if longs:
        return Primitive(prefix + "64")
    return Primitive(prefix + "32")


def join_tokens(tokens: Sequence[Token]) -> str:
    out = ""
    prev = None
    for t in tokens:
        wordy = t.kind in (IDENTIFIER, KEYWORD, INTEGER, LITERAL)
        if prev is not None and wordy and prev.kind in (IDENTIFIER, KEYWORD, INTEGER, LITERAL):
            out += " "
        elif prev is not None and prev.text == "," :
            out += " "
        out += t.text
        prev = t
    return out


class Parser:
    def __init__(self, tokens: Sequence[Token], file: Optional[str] = None):
        self.toks = list(tokens)
        if not self.toks or self.toks[-1].kind != EOF:
            last = self.toks[-1] if self.toks else None
            self.toks.append(Token(EOF, "", last.line if last else 1, last.column if last else 1))
        self.i = 0
        self.file = file
        self.decls: List[RawDecl] = []
        self.diags: List[Diagnostic] = []
        self.namespaces: List[str] = []
        self.anon = 0

    # -- token helpers -----------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != EOF:
            self.i += 1
        return t

    def at(self, *texts: str) -> bool:
        return self.peek().is_(*texts)

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.kind == EOF:
            raise _Unbalanced(t)
        if t.text != text:
            self.error(f"expected '{text}', found '{t.text}'", t)
            raise _Skip
        return self.next()

    def warn(self, message: str, tok: Token) -> None:
        self.diags.append(Diagnostic(WARNING, message, tok.line, tok.column, self.file))

    def error(self, message: str, tok: Token) -> None:
        self.diags.append(Diagnostic(ERROR, message, tok.line, tok.column, self.file))

    def skip_group(self) -> None:
        """Skip a bracketed group starting at the current opener."""
        pairs = {"(": ")", "[": "]", "{": "}"}
        opener = self.next()
        stack = [pairs[opener.text]]
        while stack:
            t = self.next()
            if t.kind == EOF:
                raise _Unbalanced(opener)
            if t.text in pairs:
                stack.append(pairs[t.text])
            elif t.text in (")", "]", "}"):
                if t.text != stack[-1]:
                    raise _Unbalanced(opener)
                stack.pop()

    def skip_statement(self, stop_after_block: bool = True) -> None:
        """Skip to the end of the current statement.

        A braced block ends the statement (function bodies) unless followed
        by ``;``.
        """
        while True:
            t = self.peek()
            if t.kind == EOF:
                return
            if t.text in (")", "]", "}"):
                if t.text == "}":
                    return
                self.next()
                continue
            if t.text == ";":
                self.next()
                return
            if t.text in ("(", "["):
                self.skip_group()
                continue
            if t.text == "{":
                self.skip_group()
                if stop_after_block:
                    self.accept(";")
                    return
                continue
            self.next()

    def skip_angles(self) -> List[Token]:
        """Consume ``<...>`` and return the inner tokens."""
        start = self.expect("<")
        depth = 1
        inner = []
        while True:
            t = self.peek()
            if t.kind == EOF:
                raise _Unbalanced(start)
            if t.text in ("(", "["):
                a = self.i
                self.skip_group()
                inner.extend(self.toks[a:self.i])
                continue
            if t.text in (";", "{", "}"):
                self.error("unterminated template argument list", start)
                raise _Skip
            self.next()
            if t.text == "<":
                depth += 1
            elif t.text == ">":
                depth -= 1
                if depth == 0:
                    return inner
            inner.append(t)

    def qualified_name(self) -> str:
        start = self.i
        self.accept("::")
        while True:
            t = self.peek()
            if t.kind != IDENTIFIER:
                self.error(f"expected a name, found '{t.text or 'end of input'}'", t)
                raise _Skip
            self.next()
            if self.at("<"):
                self.skip_angles()
            if self.at("::") and self.peek(1).kind == IDENTIFIER:
                self.next()
                continue
            break
        return join_tokens(self.toks[start:self.i])

    def scope(self, extra: Sequence[str] = ()) -> str:
        return "::".join([n for n in self.namespaces if n] + list(extra))

    def qualify(self, name: str, outer: Optional[str]) -> str:
        if outer:
            return f"{outer}::{name}"
        prefix = self.scope()
        return f"{prefix}::{name}" if prefix else name

    # -- top level ---------------------------------------------------------

    def parse(self) -> List[RawDecl]:
        while self.peek().kind != EOF:
            start = self.i
            try:
                self.top_level()
            except _Unbalanced as exc:
                self.error("unbalanced braces; declaration abandoned", exc.token)
                self.recover_after(start)
            except _Skip:
                try:
                    self.skip_statement()
                except _Unbalanced as exc:
                    self.error("unbalanced braces; declaration abandoned", exc.token)
                    self.recover_after(start)
            if self.i == start:
                self.next()
        if self.namespaces:
            self.error("unterminated namespace", self.peek())
        return self.decls

    def recover_after(self, start: int) -> None:
        # resume after the opening line of the failed declaration
        line = self.toks[start].line
        self.i = start
        while self.peek().kind != EOF and self.peek().line == line:
            self.next()

    def top_level(self) -> None:
        t = self.peek()
        if t.kind == PRAGMA:
            self.pragma(self.next())
        elif t.is_(";"):
            self.next()
        elif t.is_("template"):
            self.template_decl(outer=None, access=None)
        elif t.is_("class", "struct", "union"):
            if self.head_is_definition():
                self.class_def(outer=None, template=None)
                self.skip_statement()
            else:
                self.skip_statement()
        elif t.is_("typedef"):
            self.typedef_decl(outer=None)
        elif t.is_("namespace"):
            self.next()
            name = self.next().text if self.peek().kind == IDENTIFIER else ""
            if self.accept("{"):
                self.namespaces.append(name)
            else:
                self.skip_statement()
        elif t.is_("extern") and self.peek(1).kind == LITERAL and self.peek(2).is_("{"):
            self.i += 3
            self.namespaces.append("")
        elif t.is_("}"):
            self.next()
            if self.namespaces:
                self.namespaces.pop()
                self.accept(";")
            else:
                self.error("unmatched '}'", t)
        elif t.is_("enum"):
            self.warn("enum declarations are not modelled", t)
            self.skip_statement(stop_after_block=False)
        else:
            self.warn(f"unsupported declaration starting with '{t.text}' skipped", t)
            self.skip_statement()

    def pragma(self, tok: Token) -> None:
        words = tok.text.split()
        kind, args = words[0], words[1:]
        if kind == "omit" and len(args) in (1, 2):
            action = args[0] if len(args) == 2 else None
            self.add(OMIT_PRAGMA, OmitPragma(action, args[-1]), tok, tok)
        elif kind == "single_obj_ptr" and len(args) == 1:
            self.add(SINGLE_OBJECT_PRAGMA, SingleObjectPragma(args[0]), tok, tok)
        else:
            self.warn(f"malformed pragma '{tok.text}' ignored", tok)

    def add(self, variant: str, payload, first: Token, last: Token) -> None:
        self.decls.append(
            RawDecl(variant, payload, (first.line, first.column), (last.line, last.column), self.file)
        )

    def head_is_definition(self) -> bool:
        """Whether the class-key at the cursor starts a class body."""
        j = self.i + 1
        toks = self.toks
        if toks[j].is_("::"):
            j += 1
        while toks[j].kind == IDENTIFIER:
            j += 1
            if toks[j].is_("<"):
                depth = 0
                while toks[j].kind != EOF:
                    if toks[j].is_("<"):
                        depth += 1
                    elif toks[j].is_(">"):
                        depth -= 1
                        if depth == 0:
                            break
                    elif toks[j].is_(";", "{", "}"):
                        return False
                    j += 1
                j += 1
            if toks[j].is_("::"):
                j += 1
                continue
            break
        if toks[j].kind == IDENTIFIER and toks[j].text == "final":
            j += 1
        if toks[j].is_("{"):
            return True
        if toks[j].is_(":"):
            while toks[j].kind != EOF and not toks[j].is_(";", "(", ")", "}"):
                if toks[j].is_("{"):
                    return True
                j += 1
        return False

    def template_header(self) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
        self.expect("template")
        inner = self.skip_angles()
        names, decls = [], []
        groups: List[List[Token]] = [[]]
        depth = 0
        for t in inner:
            if t.is_("<", "(", "["):
                depth += 1
            elif t.is_(">", ")", "]"):
                depth -= 1
            if t.is_(",") and depth == 0:
                groups.append([])
            else:
                groups[-1].append(t)
        for g in groups:
            if not g:
                continue
            if any(t.is_("=") for t in g):
                g = g[:next(k for k, t in enumerate(g) if t.is_("="))]
            idents = [t for t in g if t.kind == IDENTIFIER]
            if not idents:
                continue
            names.append(idents[-1].text)
            decls.append(join_tokens(g))
        return tuple(names), tuple(decls)

    def template_decl(self, outer: Optional[str], access: Optional[str]) -> None:
        first = self.peek()
        params = self.template_header()
        if self.at("class", "struct", "union") and self.head_is_definition():
            self.class_def(outer=outer, template=params, first=first)
            self.skip_statement()
            return
        if outer is None:
            self.warn("template declaration other than a class template skipped", first)
        else:
            self.warn("member template skipped", first)
        self.skip_statement()

    # -- classes -----------------------------------------------------------

    def class_def(self, outer: Optional[str], template, name: Optional[str] = None,
                  first: Optional[Token] = None) -> Optional[str]:
        """Parse a class head and body, registering it. Returns the qualified name."""
        key = self.next()
        kind = key.text
        if self.peek().kind == IDENTIFIER or self.at("::"):
            name = self.qualified_name()
        if name is None:
            self.anon += 1
            name = f"__anon{self.anon}"
        if self.peek().kind == IDENTIFIER and self.peek().text == "final":
            self.next()
        qname = self.qualify(name, outer)
        default_access = PRIVATE if kind == "class" else PUBLIC
        bases = []
        if self.accept(":"):
            bases = self.base_list(default_access)
        open_brace = self.expect("{")
        if kind == "union" and bases:
            self.error(f"union {name} cannot have base classes", key)
            bases = []
        members, has_np = self.class_body(qname, kind, default_access, open_brace)
        last = self.toks[self.i - 1]
        tparams, tdecls = template or ((), ())
        decl = ClassDecl(
            name=qname,
            kind=kind,
            template_params=tparams,
            bases=tuple(bases),
            members=tuple(members),
            has_private_or_protected=has_np,
            template_param_decls=tdecls,
            file=self.file,
            line=key.line,
            column=key.column,
        )
        self.add(CLASS_DECL, decl, first or key, last)
        return qname

    def base_list(self, default_access: str) -> List[Base]:
        bases = []
        while True:
            access, virtual = default_access, False
            while self.at("public", "private", "protected", "virtual"):
                w = self.next().text
                if w == "virtual":
                    virtual = True
                else:
                    access = w
            bases.append(Base(self.qualified_name(), access, virtual))
            if not self.accept(","):
                return bases

    def class_body(self, qname: str, kind: str, access: str, open_brace: Token):
        members: List[Member] = []
        has_np = False
        short = qname.rpartition("::")[2].split("<")[0]
        while True:
            t = self.peek()
            if t.kind == EOF:
                raise _Unbalanced(open_brace)
            if t.is_("}"):
                self.next()
                return members, has_np or any(m.access != PUBLIC for m in members)
            if t.is_(*ACCESS_WORDS) and self.peek(1).is_(":"):
                access = t.text
                has_np = has_np or access != PUBLIC
                self.i += 2
                continue
            start = self.i
            try:
                self.member_statement(qname, short, kind, access, members)
            except _Skip:
                self.skip_statement()
            if self.i == start:
                self.next()

    def member_statement(self, qname, short, kind, access, members) -> None:
        t = self.peek()
        if t.is_(";"):
            self.next()
        elif t.kind == PRAGMA:
            self.pragma(self.next())
        elif t.is_("template"):
            self.template_decl(outer=qname, access=access)
        elif t.is_("class", "struct", "union") and self.head_is_definition():
            inner = self.class_def(outer=qname, template=None)
            if self.at(";"):
                self.next()
                if inner.rpartition("::")[2].startswith("__anon"):
                    self.warn("anonymous nested aggregate members are not modelled", t)
            else:
                self.declarators(Named(inner), access, members, is_static=False)
        elif t.is_("typedef"):
            self.typedef_decl(outer=qname)
        elif t.is_("friend"):
            self.skip_statement()
        elif t.is_("using", "enum"):
            self.warn(f"'{t.text}' declaration inside class {short} not modelled", t)
            self.skip_statement(stop_after_block=False)
        elif t.is_("~"):
            self.skip_function()
        elif t.kind == IDENTIFIER and self.peek(1).is_("(") and not self.peek(2).is_("*", "&"):
            # constructor, or a macro call such as CLASSDESC_ACCESS(C);
            if t.text != short and t.text not in ACCESS_MACROS:
                self.warn(f"declaration '{t.text}(...)' without a type skipped", t)
            self.skip_function()
        elif t.is_("explicit") and self.peek(1).text == short and self.peek(2).is_("("):
            self.skip_function()
        else:
            self.member_decl(access, members)

    def skip_function(self) -> None:
        """Skip a constructor/destructor/macro-call, including any body."""
        while not self.at("(") and self.peek().kind != EOF:
            self.next()
        if self.peek().kind == EOF:
            return
        self.skip_group()
        while self.peek().kind != EOF:
            if self.at(";"):
                self.next()
                return
            if self.at("{"):
                self.skip_group()
                self.accept(";")
                return
            if self.at("("):
                self.skip_group()
                continue
            if self.at("}"):
                return
            self.next()

    # -- declarations ------------------------------------------------------

    def specifiers(self):
        """Parse declaration specifiers. Returns (base type or None-for-void, flags)."""
        words: List[str] = []
        named: Optional[str] = None
        flags = set()
        first = self.peek()
        while True:
            t = self.peek()
            if t.kind == KEYWORD and t.text in SPECIFIER_WORDS:
                flags.add(self.next().text)
                continue
            if t.kind == KEYWORD and t.text in BUILTIN_WORDS and named is None:
                words.append(self.next().text)
                continue
            if (t.kind == IDENTIFIER or t.is_("::")) and named is None and not words:
                named = self.qualified_name()
                continue
            break
        if named is not None:
            return Named(named), flags
        if not words:
            self.warn(f"unrecognized declaration starting with '{first.text}' skipped", first)
            raise _Skip
        try:
            prim = builtin_type(words)
        except ValueError as exc:
            self.error(str(exc), first)
            raise _Skip
        return (Named("void") if prim is None else prim), flags

    def member_decl(self, access: str, members: List[Member]) -> None:
        if self.at("operator") or (self.peek().kind == KEYWORD and self.peek().text in BUILTIN_WORDS
                                   and self.peek(1).is_("operator")):
            self.warn("operator declaration skipped", self.peek())
            self.skip_function()
            return
        base, flags = self.specifiers()
        if self.at("operator"):
            self.warn("operator declaration skipped", self.peek())
            self.skip_function()
            return
        self.declarators(base, access, members, is_static="static" in flags)

    def declarators(self, base: TypeExpr, access: str, members: List[Member], is_static: bool) -> None:
        while True:
            d = self.declarator(base)
            if d is None:
                return
            name, texpr, fn, tok, ref = d
            if fn is not None:
                members.append(Member(
                    name, texpr, access, serializable=False, is_function=True,
                    function_signature_class=fn, is_static=is_static,
                    line=tok.line, column=tok.column,
                ))
                if self.function_tail():
                    return
            else:
                serializable = not is_static and not ref
                if ref:
                    self.warn(f"reference member {name} is not serializable", tok)
                if texpr == Named("void"):
                    self.error(f"member {name} has type void", tok)
                else:
                    members.append(Member(
                        name, texpr, access, serializable=serializable, is_static=is_static,
                        line=tok.line, column=tok.column,
                    ))
                if self.at("=", "{"):
                    self.skip_initializer()
            if self.accept(","):
                continue
            if self.accept(";"):
                return
            t = self.peek()
            if t.kind == EOF:
                raise _Unbalanced(t)
            self.warn(f"unexpected '{t.text}' in declaration; skipped to ';'", t)
            self.skip_statement()
            return

    def skip_initializer(self) -> None:
        while not self.at(",", ";") and self.peek().kind != EOF:
            if self.at("(", "[", "{"):
                self.skip_group()
            elif self.at("}"):
                return
            else:
                self.next()

    def function_tail(self) -> bool:
        """Consume qualifiers and body after a parameter list. True if a body ended it."""
        while True:
            t = self.peek()
            if t.kind == EOF:
                raise _Unbalanced(t)
            if t.is_("{"):
                self.skip_group()
                self.accept(";")
                return True
            if t.is_(";", ","):
                return False
            if t.is_("(", "["):
                self.skip_group()
                continue
            if t.is_("}"):
                return False
            self.next()

    def declarator(self, base: TypeExpr):
        """Parse one declarator.

        Returns (name, type, signature-class-or-None, name-token, is-reference).
        """
        depth = 0
        ref = False
        member_of = None
        while True:
            if self.accept("*"):
                depth += 1
            elif self.at("&", "&&"):
                self.next()
                ref = True
            elif self.at(*CV_WORDS):
                self.next()
            elif (self.peek().kind == IDENTIFIER and self.peek(1).is_("::")) or (
                self.at("::") and self.peek(1).kind == IDENTIFIER
            ):
                j = self.i
                if self.toks[j].is_("::"):
                    j += 1
                while self.toks[j].kind == IDENTIFIER and self.toks[j + 1].is_("::"):
                    j += 2
                if not self.toks[j].is_("*"):
                    break
                member_of = join_tokens(self.toks[self.i:j - 1])
                self.i = j + 1
                depth += 1
            else:
                break
        if self.at("("):
            return self.paren_declarator(base, depth, member_of)
        t = self.peek()
        if t.kind != IDENTIFIER:
            if t.is_(";") and depth == 0:
                return None
            self.warn(f"expected a declarator name, found '{t.text or 'end of input'}'", t)
            raise _Skip
        name_tok = self.next()
        texpr = self.wrap_pointer(base, depth, member_of)
        if self.at("("):
            sig = self.params_signature()
            return name_tok.text, texpr, sig, name_tok, ref
        extents = []
        while self.at("["):
            open_ = self.next()
            t = self.peek()
            if t.kind == INTEGER and self.peek(1).is_("]"):
                extents.append(integer_value(self.next().text))
                self.next()
            else:
                self.error(f"array extent of {name_tok.text} must be an integer literal", open_)
                self.i -= 1
                self.skip_group()
                raise _Skip
        if self.at(":"):
            self.error(f"bitfield member {name_tok.text} is not supported", self.peek())
            raise _Skip
        if extents:
            total = 1
            for e in extents:
                total *= e
            if total < 1:
                self.error(f"array {name_tok.text} has zero extent", name_tok)
                raise _Skip
            texpr = Array(texpr, total)
        return name_tok.text, texpr, None, name_tok, ref

    def paren_declarator(self, base, depth, member_of):
        # (*name)(args), (C::*name)(args) or (*name)[N]
        open_ = self.next()
        inner_depth = 0
        inner_member = None
        while True:
            if self.accept("*"):
                inner_depth += 1
            elif self.at(*CV_WORDS, "&"):
                self.next()
            elif self.peek().kind == IDENTIFIER and self.peek(1).is_("::"):
                j = self.i
                while self.toks[j].kind == IDENTIFIER and self.toks[j + 1].is_("::"):
                    j += 2
                if not self.toks[j].is_("*"):
                    break
                inner_member = join_tokens(self.toks[self.i:j - 1])
                self.i = j + 1
                inner_depth += 1
            else:
                break
        if self.peek().kind != IDENTIFIER:
            self.warn("unsupported parenthesized declarator skipped", open_)
            raise _Skip
        name_tok = self.next()
        if not self.at(")"):
            self.warn("unsupported parenthesized declarator skipped", open_)
            raise _Skip
        self.next()
        if self.at("("):
            self.skip_group()
            while self.at(*CV_WORDS):
                self.next()
            if inner_depth == 0:
                # (name)(args): a plain function with redundant parentheses
                return name_tok.text, base, NO_SIGNATURE, name_tok, False
            texpr = Pointer(None, member_of=inner_member, function=True)
            return name_tok.text, texpr, None, name_tok, False
        while self.at("["):
            self.skip_group()
        pointee = self.wrap_pointer(base, depth, member_of)
        texpr = Pointer(pointee, member_of=inner_member)
        for _ in range(inner_depth - 1):
            texpr = Pointer(texpr)
        return name_tok.text, texpr, None, name_tok, False

    @staticmethod
    def wrap_pointer(base: TypeExpr, depth: int, member_of: Optional[str]) -> TypeExpr:
        t = base
        for k in range(depth):
            t = Pointer(t, member_of=member_of if k == depth - 1 else None)
        return t

    def params_signature(self) -> str:
        start = self.i
        self.skip_group()
        inner = self.toks[start + 1:self.i - 1]
        return signature_class(inner)

    # -- typedefs ----------------------------------------------------------

    def typedef_decl(self, outer: Optional[str]) -> None:
        first = self.expect("typedef")
        if self.at("class", "struct", "union") and self.head_is_definition():
            # typedef struct [tag] { ... } Name, *PName;
            save = self.i
            named_tag = self.peek(1).kind == IDENTIFIER
            if named_tag:
                qname = self.class_def(outer=outer, template=None)
            else:
                synth = self.synth_typedef_name()
                self.i = save
                qname = self.class_def(outer=outer, template=None, name=synth)
            members: List[Member] = []
            self.declarators(Named(qname), PUBLIC, members, is_static=False)
            short = qname.rpartition("::")[2]
            for m in members:
                if m.name == short and m.type == Named(qname):
                    continue
                self.add(TYPEDEF_DECL, Typedef(self.qualify(m.name, outer), m.type), first,
                         self.toks[self.i - 1])
            return
        if self.at("class", "struct", "union"):
            self.next()
        if self.at("enum"):
            self.warn("enum typedef not modelled", first)
            self.skip_statement(stop_after_block=False)
            return
        base, _ = self.specifiers()
        while True:
            d = self.declarator(base)
            if d is None:
                self.warn("typedef without a name", first)
                self.skip_statement()
                return
            name, texpr, fn, tok, _ = d
            if fn is not None:
                texpr = Pointer(None, function=True)
            self.add(TYPEDEF_DECL, Typedef(self.qualify(name, outer), texpr), first, tok)
            if self.accept(","):
                continue
            self.expect(";")
            return

    def synth_typedef_name(self) -> str:
        """Find the first plain declarator after an anonymous aggregate body."""
        self.next()
        while not self.at("{"):
            if self.peek().kind == EOF:
                raise _Unbalanced(self.peek())
            self.next()
        self.skip_group()
        while self.at("*", "&", *CV_WORDS):
            self.next()
        if self.peek().kind == IDENTIFIER:
            return self.peek().text
        self.anon += 1
        return f"__anon{self.anon}"


def signature_class(params: Sequence[Token]) -> str:
    """Classify a parameter list as no-args, argc-argv or neither."""
    if not params or (len(params) == 1 and params[0].is_("void")):
        return NO_ARGS
    groups: List[List[Token]] = [[]]
    depth = 0
    for t in params:
        if t.is_("(", "[", "<"):
            depth += 1
        elif t.is_(")", "]", ">"):
            depth -= 1
        if t.is_(",") and depth == 0:
            groups.append([])
        else:
            groups[-1].append(t)
    if len(groups) != 2:
        return NO_SIGNATURE
    count, vector = groups
    count_words = [t.text for t in count if t.kind == KEYWORD and t.text not in CV_WORDS]
    count_names = [t for t in count if t.kind == IDENTIFIER]
    if count_words != ["int"] or len(count_names) > 1 or len(count) != len(count_words) + len(count_names):
        return NO_SIGNATURE
    texts = [t.text for t in vector]
    stars = texts.count("*")
    brackets = sum(1 for a, b in zip(texts, texts[1:]) if a == "[" and b == "]")
    words = [t for t in vector if t.kind == KEYWORD and t.text not in CV_WORDS]
    if [w.text for w in words] == ["char"] and stars + brackets == 2:
        return ARGC_ARGV
    return NO_SIGNATURE


def parse_unit(tokens: Sequence[Token], file: Optional[str] = None):
    """Parse a token stream into raw declarations plus diagnostics."""
    p = Parser(tokens, file)
    decls = p.parse()
    return decls, p.diags


def parse_source(source: str, file: Optional[str] = None):
    """Tokenize and parse ``source``; diagnostics from both stages are merged."""
    lexed = tokenize(source)
    decls, diags = parse_unit(lexed.tokens, file)
    lex_diags = [Diagnostic(d.severity, d.message, d.line, d.column, file) for d in lexed.diagnostics]
    return decls, lex_diags + diags
