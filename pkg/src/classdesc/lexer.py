"""Tokenizer for the supported C++ declaration subset.

Comments are dropped, preprocessor lines are skipped, and the two pragmas the
toolchain understands (``#pragma omit`` and ``#pragma single_obj_ptr``) are
kept as single ``pragma-directive`` tokens.
"""

import re
from dataclasses import dataclass, field
from typing import List, Tuple

from .diagnostics import ERROR, Diagnostic

IDENTIFIER = "identifier"
KEYWORD = "keyword"
PUNCTUATION = "punctuation"
INTEGER = "integer-literal"
LITERAL = "literal"
PRAGMA = "pragma-directive"
EOF = "end-of-input"

KEYWORDS = frozenset(
    """
    class struct union typedef template typename public private protected
    virtual static const volatile mutable inline explicit friend operator
    enum namespace using extern unsigned signed short long int char bool
    float double void
    """.split()
)

KNOWN_PRAGMAS = ("omit", "single_obj_ptr")

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_NUMBER_RE = re.compile(r"[0-9][0-9A-Za-z_.']*|\.[0-9][0-9A-Za-z_.']*")
_INTEGER_RE = re.compile(r"(0[xX][0-9a-fA-F']+|0[bB][01']+|[0-9][0-9']*)[uUlL]*")
_MULTI_PUNCT = ("...", "::", "->")
_SPACE = " \t\r\n\f\v"


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int
    # character offsets into the source, used by the rewriter
    offset: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)

    def is_(self, *texts: str) -> bool:
        return self.kind != EOF and self.text in texts


@dataclass
class LexResult:
    tokens: List[Token]
    diagnostics: List[Diagnostic]
    comments: List[Tuple[int, int]]  # (start, end) character spans


def integer_value(text: str) -> int:
    body = text.rstrip("uUlL").replace("'", "")
    if body[:2] in ("0x", "0X"):
        return int(body[2:], 16)
    if body[:2] in ("0b", "0B"):
        return int(body[2:], 2)
    if len(body) > 1 and body.startswith("0"):
        return int(body, 8)
    return int(body)


class _Scanner:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: List[Token] = []
        self.diags: List[Diagnostic] = []
        self.comments: List[Tuple[int, int]] = []
        # true while only whitespace has been seen on the current line
        self.at_line_start = True

    def advance(self, n: int = 1) -> None:
        for ch in self.src[self.pos:self.pos + n]:
            if ch == "\n":
                self.line += 1
                self.col = 1
                self.at_line_start = True
            else:
                self.col += 1
        self.pos += n

    def skip_to_next_line(self) -> None:
        nl = self.src.find("\n", self.pos)
        self.advance((len(self.src) if nl < 0 else nl + 1) - self.pos)

    def error(self, message: str, line: int, col: int) -> None:
        self.diags.append(Diagnostic(ERROR, message, line, col))

    def emit(self, kind: str, text: str, line: int, col: int, start: int) -> None:
        self.tokens.append(Token(kind, text, line, col, start, start + len(text)))

    def run(self) -> LexResult:
        src = self.src
        while self.pos < len(src):
            ch = src[self.pos]
            if ch in _SPACE:
                self.advance()
                continue
            if src.startswith("//", self.pos):
                start = self.pos
                nl = src.find("\n", self.pos)
                stop = len(src) if nl < 0 else nl
                if stop > start and src[stop - 1] == "\r":
                    stop -= 1
                self.advance(stop - self.pos)
                self.comments.append((start, stop))
                continue
            if src.startswith("/*", self.pos):
                self.block_comment()
                continue
            if ch == "#" and self.at_line_start:
                self.directive()
                continue
            self.at_line_start = False
            line, col, start = self.line, self.col, self.pos
            m = _IDENT_RE.match(src, self.pos)
            if m:
                text = m.group()
                self.emit(KEYWORD if text in KEYWORDS else IDENTIFIER, text, line, col, start)
                self.advance(len(text))
                continue
            m = _NUMBER_RE.match(src, self.pos)
            if m:
                text = m.group()
                kind = INTEGER if _INTEGER_RE.fullmatch(text) else LITERAL
                self.emit(kind, text, line, col, start)
                self.advance(len(text))
                continue
            if ch in "\"'":
                self.quoted(ch)
                continue
            for p in _MULTI_PUNCT:
                if src.startswith(p, self.pos):
                    text = p
                    break
            else:
                text = ch
            self.emit(PUNCTUATION, text, line, col, start)
            self.advance(len(text))
        self.tokens.append(Token(EOF, "", self.line, self.col, self.pos, self.pos))
        return LexResult(self.tokens, self.diags, self.comments)

    def block_comment(self) -> None:
        start = self.pos
        stop = self.src.find("*/", self.pos + 2)
        if stop < 0:
            self.error("unterminated block comment", self.line, self.col)
            self.comments.append((start, len(self.src)))
            self.skip_to_next_line()
            return
        at_start = self.at_line_start
        self.advance(stop + 2 - self.pos)
        self.comments.append((start, stop + 2))
        if self.src.count("\n", start, stop) == 0:
            self.at_line_start = at_start

    def quoted(self, quote: str) -> None:
        line, col, start = self.line, self.col, self.pos
        i = self.pos + 1
        src = self.src
        while i < len(src):
            c = src[i]
            if c == "\\":
                i += 2
                continue
            if c == "\n":
                break
            if c == quote:
                text = src[start:i + 1]
                self.emit(LITERAL, text, line, col, start)
                self.advance(len(text))
                return
            i += 1
        what = "string" if quote == '"' else "character"
        self.error(f"unterminated {what} literal", line, col)
        self.skip_to_next_line()

    def directive(self) -> None:
        line, col, start = self.line, self.col, self.pos
        # gather the logical line, honouring backslash continuations
        end = self.pos
        src = self.src
        while True:
            nl = src.find("\n", end)
            if nl < 0:
                end = len(src)
                break
            if src[end:nl].rstrip("\r").endswith("\\"):
                end = nl + 1
                continue
            end = nl
            break
        text = src[start:end].replace("\\\n", " ")
        self.advance(end - self.pos)
        text = re.sub(r"//.*|/\*.*?\*/", " ", text)
        words = text[1:].split()
        if len(words) >= 2 and words[0] == "pragma" and words[1] in KNOWN_PRAGMAS:
            body = " ".join(words[1:])
            self.tokens.append(Token(PRAGMA, body, line, col, start, end))


def tokenize(source: str) -> LexResult:
    """Split ``source`` into tokens, ending with an end-of-input token.

    Never raises; malformed comments and literals produce error diagnostics
    and lexing resumes on the following line.
    """
    return _Scanner(source).run()
