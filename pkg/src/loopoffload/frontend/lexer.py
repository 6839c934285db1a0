"""Tokenizer with the small amount of preprocessing the front-end supports.

Handled: ``#include`` lines are skipped, object-like ``#define`` constants are
expanded, ``// offload: ...`` comments are collected as annotations. Every
other directive is dropped (conditional branches are all kept).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import CSyntaxError

_PUNCT = sorted(
    """
    <<= >>= ... -> ++ -- << >> <= >= == != && || += -= *= /= %= &= ^= |= ##
    + - * / % < > = ! ~ & | ^ ? : ; , . ( ) [ ] { } #
    """.split(),
    key=len,
    reverse=True,
)

_NUMBER = re.compile(
    r"""
    0[xX][0-9a-fA-F]+[uUlL]*
    | (?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?[fFlLuU]*
    """,
    re.VERBOSE,
)
_IDENT = re.compile(r"[A-Za-z_]\w*")
_ANNOTATION = re.compile(r"^\s*offload\s*:(.*)$")
_DEFINE = re.compile(r"^\s*define\s+([A-Za-z_]\w*)(\(?)(.*)$", re.DOTALL)


@dataclass(frozen=True)
class Token:
    kind: str  # id | num | str | char | op | eof
    text: str
    line: int
    file: str = ""


@dataclass
class Annotation:
    file: str
    line: int
    body: str  # text after "offload:"


@dataclass
class LexResult:
    tokens: list
    annotations: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    defines: dict = field(default_factory=dict)
    line_count: int = 0


def _scan(text: str, file: str, line: int = 1, result: LexResult | None = None):
    """Raw tokens plus directives, before macro expansion."""
    result = result if result is not None else LexResult(tokens=[])
    out = []
    i, n = 0, len(text)
    at_line_start = True
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
            at_line_start = True
            continue
        if c in " \t\r\f\v":
            i += 1
            continue
        if c == "\\" and text.startswith("\n", i + 1):
            line += 1
            i += 2
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            j = n if j < 0 else j
            m = _ANNOTATION.match(text[i + 2 : j])
            if m:
                result.annotations.append(Annotation(file, line, m.group(1)))
            i = j
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                raise CSyntaxError("unterminated comment", file, line)
            line += text.count("\n", i, j)
            i = j + 2
            continue
        if c == "#" and at_line_start:
            # directive runs to end of line, honouring continuations
            j = i + 1
            buf = []
            start_line = line
            while j < n and text[j] != "\n":
                if text[j] == "\\" and text.startswith("\n", j + 1):
                    line += 1
                    j += 2
                    buf.append(" ")
                    continue
                if text.startswith("//", j):
                    k = text.find("\n", j)
                    j = n if k < 0 else k
                    break
                if text.startswith("/*", j):
                    k = text.find("*/", j + 2)
                    if k < 0:
                        raise CSyntaxError("unterminated comment", file, line)
                    line += text.count("\n", j, k)
                    buf.append(" ")
                    j = k + 2
                    continue
                buf.append(text[j])
                j += 1
            out.append(Token("directive", "".join(buf), start_line, file))
            i = j
            continue
        at_line_start = False
        if c == '"' or c == "'":
            j = i + 1
            while j < n and text[j] != c:
                if text[j] == "\\":
                    j += 1
                elif text[j] == "\n":
                    raise CSyntaxError("unterminated literal", file, line)
                j += 1
            if j >= n:
                raise CSyntaxError("unterminated literal", file, line)
            out.append(Token("str" if c == '"' else "char", text[i : j + 1], line, file))
            i = j + 1
            continue
        m = _NUMBER.match(text, i)
        if m and (c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit())):
            out.append(Token("num", m.group(0), line, file))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            out.append(Token("id", m.group(0), line, file))
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                out.append(Token("op", p, line, file))
                i += len(p)
                break
        else:
            result.diagnostics.append(f"{file}:{line}: stray character {c!r} ignored")
            i += 1
    return out, line


def tokenize(text: str, file: str = "<string>") -> LexResult:
    result = LexResult(tokens=[])
    raw, last_line = _scan(text, file, 1, result)
    result.line_count = last_line
    defines: dict[str, list[Token]] = {}
    function_macros: set[str] = set()
    tokens = []
    for tok in raw:
        if tok.kind == "directive":
            _directive(tok, defines, function_macros, result)
            continue
        if tok.kind == "id" and tok.text in defines:
            tokens.extend(_expand(tok, defines, frozenset()))
            continue
        tokens.append(tok)
    tokens.append(Token("eof", "", last_line, file))
    result.tokens = tokens
    result.defines = {k: " ".join(t.text for t in v) for k, v in defines.items()}
    return result


def _directive(tok, defines, function_macros, result):
    body = tok.text.strip()
    word = body.split(None, 1)[0] if body else ""
    if word == "define":
        m = _DEFINE.match(body)
        if not m:
            result.diagnostics.append(f"{tok.file}:{tok.line}: malformed #define ignored")
            return
        name, paren, rest = m.groups()
        if paren:
            function_macros.add(name)
            result.diagnostics.append(
                f"{tok.file}:{tok.line}: function-like macro {name} is not expanded"
            )
            return
        repl, _ = _scan(rest, tok.file, tok.line)
        defines[name] = [t for t in repl if t.kind != "directive"]
    elif word == "undef":
        parts = body.split()
        if len(parts) > 1:
            defines.pop(parts[1], None)
    elif word in ("else", "elif"):
        result.diagnostics.append(
            f"{tok.file}:{tok.line}: #{word} not evaluated; all branches are kept"
        )
    # include, pragma, if*, endif, line, error: nothing to do


def _expand(tok, defines, active):
    if tok.text in active:
        return [tok]
    out = []
    for r in defines[tok.text]:
        r = Token(r.kind, r.text, tok.line, tok.file)
        if r.kind == "id" and r.text in defines:
            out.extend(_expand(r, defines, active | {tok.text}))
        else:
            out.append(r)
    return out
