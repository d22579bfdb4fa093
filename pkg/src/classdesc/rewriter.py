"""insert-friend and fix-includes: add CLASSDESC_ACCESS calls to class bodies.

Edits are pure insertions; every byte of the input survives unchanged.
"""

import logging
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

from .diagnostics import ERROR, Diagnostic
from .lexer import EOF, IDENTIFIER, Token, tokenize

log = logging.getLogger(__name__)

ACCESS_MACRO = "CLASSDESC_ACCESS"
ACCESS_TEMPLATE_MACRO = "CLASSDESC_ACCESS_TEMPLATE"
HEADER_SUFFIXES = {".h", ".hh", ".hpp", ".hxx", ".h++", ".H", ".inl", ".tcc", ""}

_CONDITIONAL_RE = re.compile(r"^[ \t]*#[ \t]*(if|ifdef|ifndef|elif|else|endif)\b", re.M)


@dataclass
class Edit:
    line: int  # line of the opening brace the macro follows
    text: str  # inserted bytes
    offset: int = 0  # insertion offset in the input


@dataclass
class RewriteResult:
    output: str
    edits: List[Edit] = field(default_factory=list)
    changed: bool = False
    diagnostics: List[Diagnostic] = field(default_factory=list)


@dataclass
class _ClassSite:
    name: str
    keyword: str
    template: bool
    open_index: int  # token index of "{"
    close_index: int


def _match_braces(tokens: List[Token]) -> Optional[dict]:
    """Map each '{' index to its '}' index; None when unbalanced."""
    stack, pairs = [], {}
    for i, t in enumerate(tokens):
        if t.is_("{"):
            stack.append(i)
        elif t.is_("}"):
            if not stack:
                return None
            pairs[stack.pop()] = i
    return None if stack else pairs


def _skip_angles(tokens: List[Token], i: int) -> int:
    """Index just past the '>' matching the '<' at ``i``."""
    depth = 0
    while tokens[i].kind != EOF:
        if tokens[i].is_("<"):
            depth += 1
        elif tokens[i].is_(">"):
            depth -= 1
            if depth == 0:
                return i + 1
        elif tokens[i].is_(";", "{", "}"):
            return i
        i += 1
    return i


def _find_classes(tokens: List[Token], pairs: dict) -> List[_ClassSite]:
    sites = []
    n = len(tokens)
    for i, t in enumerate(tokens):
        if not t.is_("class", "struct") or (i > 0 and tokens[i - 1].is_("enum")):
            continue
        template = False
        if i > 0 and tokens[i - 1].is_(">"):
            # walk back over a template header
            depth, k = 0, i - 1
            while k >= 0:
                if tokens[k].is_(">"):
                    depth += 1
                elif tokens[k].is_("<"):
                    depth -= 1
                    if depth == 0:
                        break
                k -= 1
            template = k > 0 and tokens[k - 1].is_("template")
        j = i + 1
        name = None
        while j < n and (tokens[j].kind == IDENTIFIER or tokens[j].is_("::")):
            if tokens[j].kind == IDENTIFIER and tokens[j].text != "final":
                name = tokens[j].text
            j += 1
            if tokens[j].is_("<"):
                j = _skip_angles(tokens, j)
        if name is None:
            continue
        if tokens[j].is_(":"):
            while tokens[j].kind != EOF and not tokens[j].is_("{", ";", "(", ")", "}"):
                j += 1
        if not tokens[j].is_("{"):
            continue
        sites.append(_ClassSite(name, t.text, template, j, pairs[j]))
    return sites


def _statement_end(tokens: List[Token], i: int, stop: int) -> int:
    depth = 0
    while i < stop:
        t = tokens[i]
        if t.is_("(", "[", "{"):
            depth += 1
        elif t.is_(")", "]", "}"):
            depth -= 1
        elif t.is_(";") and depth == 0:
            return i + 1
        i += 1
    return stop


def _needs_access(tokens: List[Token], site: _ClassSite) -> Tuple[bool, bool]:
    """(has non-public region, already carries the macro) for one class body."""
    i = site.open_index + 1
    end = site.close_index
    seen_label = False
    non_public = False
    present = False
    while i < end:
        t = tokens[i]
        if t.is_("{"):
            # nested bodies (member functions, nested classes) do not count
            depth = 1
            i += 1
            while depth and i < end:
                if tokens[i].is_("{"):
                    depth += 1
                elif tokens[i].is_("}"):
                    depth -= 1
                i += 1
            continue
        if t.is_("public", "private", "protected") and tokens[i + 1].is_(":"):
            seen_label = True
            non_public = non_public or t.text != "public"
            i += 2
            continue
        if t.kind == IDENTIFIER and t.text in (ACCESS_MACRO, ACCESS_TEMPLATE_MACRO) and tokens[i + 1].is_("("):
            args = tokens[i + 2]
            if args.text == site.name:
                present = True
            i = _statement_end(tokens, i, end)
            continue
        if t.is_("friend"):
            i = _statement_end(tokens, i, end)
            continue
        if t.is_(";"):
            i += 1
            continue
        if not seen_label and site.keyword == "class":
            non_public = True
        i += 1
    return non_public, present


def _line_bounds(src: str, offset: int) -> Tuple[int, int, str]:
    """(start of line, end of line before EOL, EOL text) around ``offset``."""
    start = src.rfind("\n", 0, offset) + 1
    nl = src.find("\n", offset)
    if nl < 0:
        return start, len(src), ""
    if nl > 0 and src[nl - 1] == "\r":
        return start, nl - 1, "\r\n"
    return start, nl, "\n"


def _indent_of(src: str, line_start: int) -> str:
    m = re.match(r"[ \t]*", src[line_start:])
    return m.group() if m else ""


def _in_comment(comments, offset: int) -> bool:
    return any(a < offset < b for a, b in comments)


def insert_access_macros(source: str) -> RewriteResult:
    """Insert CLASSDESC_ACCESS(name); into classes that have non-public members."""
    lexed = tokenize(source)
    tokens = lexed.tokens
    if any(d.severity == ERROR for d in lexed.diagnostics):
        return RewriteResult(source, diagnostics=list(lexed.diagnostics))
    pairs = _match_braces(tokens)
    if pairs is None:
        msg = "unbalanced braces; no edits made"
        if _CONDITIONAL_RE.search(source):
            msg += " (braces may be split across preprocessor conditionals)"
        return RewriteResult(source, diagnostics=[Diagnostic(ERROR, msg, 1, 1)])
    default_eol = "\r\n" if "\r\n" in source else "\n"
    edits: List[Edit] = []
    diags: List[Diagnostic] = []
    for site in _find_classes(tokens, pairs):
        needs, present = _needs_access(tokens, site)
        if not needs or present:
            continue
        macro = ACCESS_TEMPLATE_MACRO if site.template else ACCESS_MACRO
        call = f"{macro}({site.name});"
        brace = tokens[site.open_index]
        line_start, line_end, eol = _line_bounds(source, brace.offset)
        nxt = tokens[site.open_index + 1]
        if eol and nxt.line > brace.line and not _in_comment(lexed.comments, line_end):
            # the brace ends its line: add a whole line after it
            indent = _indent_of(source, nxt.offset - (nxt.column - 1))
            edits.append(Edit(brace.line, eol + indent + call, line_end))
        else:
            eol = eol or default_eol
            indent = _indent_of(source, line_start)
            edits.append(Edit(brace.line, eol + indent + call + eol, brace.end))
    if not edits:
        return RewriteResult(source, diagnostics=diags)
    out = source
    for e in sorted(edits, key=lambda e: e.offset, reverse=True):
        out = out[:e.offset] + e.text + out[e.offset:]
    edits.sort(key=lambda e: e.offset)
    return RewriteResult(out, edits, True, diags)


def undo_edits(result: RewriteResult) -> str:
    """Remove the inserted text again; equals the input for a minimal rewrite."""
    out = result.output
    shift = 0
    pieces = []
    pos = 0
    for e in result.edits:
        start = e.offset + shift
        pieces.append(out[pos:start])
        pos = start + len(e.text)
        shift += len(e.text)
    pieces.append(out[pos:])
    return "".join(pieces)


@dataclass
class FixSummary:
    scanned: int = 0
    patched: int = 0
    patched_files: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)


def read_text(path: Path) -> str:
    # surrogateescape keeps arbitrary bytes round-trippable
    with open(path, "r", encoding="utf-8", errors="surrogateescape", newline="") as f:
        return f.read()


def write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", errors="surrogateescape", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def is_header(path: Path) -> bool:
    return path.suffix in HEADER_SUFFIXES


def fix_headers(corpus_dir, out_dir) -> FixSummary:
    """Write patched copies of headers needing access macros into ``out_dir``."""
    corpus = Path(corpus_dir)
    out = Path(out_dir)
    summary = FixSummary()
    files = sorted(p for p in corpus.rglob("*") if p.is_file() and is_header(p))
    for path in files:
        rel = path.relative_to(corpus)
        try:
            text = read_text(path)
        except OSError as exc:
            summary.warnings.append(f"{rel}: cannot read: {exc}")
            continue
        summary.scanned += 1
        result = insert_access_macros(text)
        for d in result.diagnostics:
            summary.warnings.append(d.format(str(rel)))
        if result.changed:
            write_text_atomic(out / rel, result.output)
            summary.patched += 1
            summary.patched_files.append(str(rel))
            log.info("patched %s (%d classes)", rel, len(result.edits))
    return summary
