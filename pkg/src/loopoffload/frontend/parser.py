"""Recursive-descent parser for the C subset the toolchain analyzes.

Constructs the parser cannot model become :class:`Opaque` statements with a
diagnostic. Only input that leaves no way to resynchronise (an unbalanced
brace at end of file, for instance) raises :class:`CSyntaxError`.
"""

from __future__ import annotations

from pathlib import Path

from ..errors import CSyntaxError
from . import nodes as N
from .lexer import Token, tokenize

BASE_WORDS = {
    "void", "char", "short", "int", "long", "float", "double", "signed",
    "unsigned", "_Bool", "_Complex",
}
QUALIFIERS = {
    "const", "volatile", "restrict", "__restrict", "__restrict__", "inline",
    "__inline", "__inline__", "register", "static", "extern", "auto",
    "__kernel", "__global", "__local", "__constant", "__private",
}
STORAGE = {"static", "extern", "register", "auto", "typedef"}

BUILTIN_TYPEDEFS = {
    "size_t": 8, "ssize_t": 8, "ptrdiff_t": 8, "intptr_t": 8, "uintptr_t": 8,
    "int8_t": 1, "uint8_t": 1, "int16_t": 2, "uint16_t": 2, "int32_t": 4,
    "uint32_t": 4, "int64_t": 8, "uint64_t": 8, "bool": 1, "time_t": 8,
    "clock_t": 8, "off_t": 8, "uint": 4, "ulong": 8, "uchar": 1, "ushort": 2,
}
OPAQUE_TYPEDEFS = {"FILE", "va_list", "pthread_t", "pthread_mutex_t", "DIR"}

BINARY_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5, "==": 6, "!=": 6,
    "<": 7, ">": 7, "<=": 7, ">=": 7, "<<": 8, ">>": 8,
    "+": 9, "-": 9, "*": 10, "/": 10, "%": 10,
}
ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "^=", "|="}


class _Fail(Exception):
    def __init__(self, tok, message):
        super().__init__(message)
        self.tok = tok


def parse_number(text: str):
    t = text.rstrip("uUlLfF") if not text.lower().startswith("0x") else text.rstrip("uUlL")
    if t.lower().startswith("0x"):
        return int(t, 16)
    if any(ch in t for ch in ".eE"):
        return float(t)
    if len(t) > 1 and t.startswith("0"):
        return int(t, 8)
    return int(t)


_ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34, "a": 7, "b": 8, "f": 12, "v": 11}


def _char_value(text: str) -> int:
    body = text[1:-1]
    if body.startswith("\\") and len(body) > 1:
        if body[1] == "x":
            return int(body[2:], 16)
        if body[1].isdigit():
            return int(body[1:], 8)
        return _ESCAPES.get(body[1], ord(body[1]))
    return ord(body[0]) if body else 0


def eval_const(expr, constants):
    """Fold an integer/float constant expression, or return None."""
    if isinstance(expr, N.Const):
        return expr.value if isinstance(expr.value, (int, float)) else None
    if isinstance(expr, N.Name):
        return constants.get(expr.name)
    if isinstance(expr, N.Cast):
        v = eval_const(expr.expr, constants)
        if v is None:
            return None
        return float(v) if expr.type_name in ("float", "double") else int(v)
    if isinstance(expr, N.Unary):
        v = eval_const(expr.operand, constants)
        if v is None:
            return None
        if expr.op == "-":
            return -v
        if expr.op == "+":
            return v
        if expr.op == "~" and isinstance(v, int):
            return ~v
        if expr.op == "!":
            return int(not v)
        return None
    if isinstance(expr, N.Binary):
        a = eval_const(expr.left, constants)
        b = eval_const(expr.right, constants)
        if a is None or b is None:
            return None
        return _fold(expr.op, a, b)
    if isinstance(expr, N.Ternary):
        c = eval_const(expr.cond, constants)
        if c is None:
            return None
        return eval_const(expr.then if c else expr.other, constants)
    return None


def _fold(op, a, b):
    both_int = isinstance(a, int) and isinstance(b, int)
    try:
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if both_int:
                q = abs(a) // abs(b)
                return q if (a >= 0) == (b >= 0) else -q
            return a / b
        if op == "%" and both_int:
            r = abs(a) % abs(b)
            return r if a >= 0 else -r
        if both_int and op in ("<<", ">>", "&", "|", "^"):
            return {"<<": a << b, ">>": a >> b, "&": a & b, "|": a | b, "^": a ^ b}[op]
        if op in ("<", ">", "<=", ">=", "==", "!="):
            return int({"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b,
                        "==": a == b, "!=": a != b}[op])
        if op == "&&":
            return int(bool(a) and bool(b))
        if op == "||":
            return int(bool(a) or bool(b))
    except (ZeroDivisionError, ValueError):
        return None
    return None


class _State:
    """Symbol knowledge shared across the files of one unit."""

    def __init__(self):
        self.typedefs: dict[str, N.CType] = {}
        self.structs: list[N.StructDef] = []
        self.globals: dict[str, N.VarDecl] = {}
        self.constants: dict[str, object] = {}
        self.functions: list[N.FunctionDecl] = []
        self.function_names: set[str] = set()
        self.diagnostics: list[str] = []
        for name, size in BUILTIN_TYPEDEFS.items():
            self.typedefs[name] = N.CType(name, size)
        for name in OPAQUE_TYPEDEFS:
            self.typedefs[name] = N.CType(name, 8, struct=name)


class Parser:
    def __init__(self, tokens: list[Token], file: str, state: _State):
        self.toks = tokens
        self.pos = 0
        self.file = file
        self.st = state
        self.scope: dict | None = None  # symbols of the function being parsed

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text) -> bool:
        t = self.tok
        return t.kind in ("op", "id") and t.text == text

    def accept(self, text) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text) -> Token:
        if not self.at(text):
            raise _Fail(self.tok, f"expected {text!r} before {self.tok.text or 'end of file'!r}")
        t = self.tok
        self.pos += 1
        return t

    def ident(self) -> str:
        if self.tok.kind != "id":
            raise _Fail(self.tok, f"expected identifier before {self.tok.text!r}")
        t = self.tok.text
        self.pos += 1
        return t

    def diag(self, line, message):
        self.st.diagnostics.append(f"{self.file}:{line}: {message}")

    def is_type_start(self, tok=None) -> bool:
        tok = tok or self.tok
        if tok.kind != "id":
            return False
        t = tok.text
        return (
            t in BASE_WORDS or t in QUALIFIERS or t in STORAGE
            or t in ("struct", "union", "enum") or t in self.st.typedefs
        )

    # -- unit ----------------------------------------------------------------

    def parse_unit(self):
        while self.tok.kind != "eof":
            start = self.pos
            try:
                self.external_declaration()
            except _Fail as exc:
                self.pos = start
                line = self.toks[start].line
                self._skip_construct(start)
                self.diag(line, f"unrecognized top-level construct skipped ({exc})")

    def _skip_construct(self, start):
        depth = 0
        i = start
        while True:
            t = self.toks[i]
            if t.kind == "eof":
                raise CSyntaxError("unbalanced braces or parentheses", self.file, self.toks[start].line)
            if t.kind == "op":
                if t.text in "([{":
                    depth += 1
                elif t.text in ")]}":
                    if depth == 0:
                        if t.text == "}" and i > start:
                            break
                        i += 1
                        continue
                    depth -= 1
                    if depth == 0 and t.text == "}":
                        i += 1
                        if self.toks[i].kind == "op" and self.toks[i].text == ";":
                            i += 1
                        break
                elif t.text == ";" and depth == 0:
                    i += 1
                    break
            i += 1
        self.pos = i

    def external_declaration(self):
        if self.accept(";"):
            return
        line = self.tok.line
        base, storage = self.decl_specifiers()
        if self.accept(";"):
            return
        while True:
            name, ctype, dims, params, dline = self.declarator(base)
            if params is not None and self.at("{"):
                if name is None:
                    raise _Fail(self.tok, "function without a name")
                self.function_definition(name, ctype, params, dline)
                return
            if name is None:
                raise _Fail(self.tok, "declaration without a name")
            if storage == "typedef":
                self.st.typedefs[name] = self._typedef_type(name, ctype, dims)
            elif params is not None:
                self.st.function_names.add(name)
            else:
                init = self.initializer() if self.accept("=") else None
                decl = N.VarDecl(name, ctype, dims, init, dline or line, storage)
                self.st.globals.setdefault(name, decl)
                if init is not None and not dims and ctype.pointer == 0:
                    v = eval_const(init, self.st.constants)
                    if v is not None and ctype.const:
                        self.st.constants[name] = v
            if self.accept(","):
                continue
            self.expect(";")
            return

    def _typedef_type(self, name, ctype, dims):
        if ctype.struct is not None and ctype.pointer == 0 and not dims:
            for k, s in enumerate(self.st.structs):
                key = f"<anon{k}>" if s.tag is None else f"{s.kind} {s.tag}"
                if key == ctype.base:
                    if s.typedef_name is None:
                        s.typedef_name = name
                    break
            return N.CType(name, ctype.size, 0, False, struct=name)
        return N.CType(ctype.base, ctype.size, ctype.pointer + (1 if dims else 0), ctype.is_float, ctype.struct, ctype.const)

    def function_definition(self, name, ctype, params, line):
        symbols = {}
        for p in params:
            if p.name:
                symbols.setdefault(p.name, p)
        self.scope = symbols
        self.st.function_names.add(name)
        try:
            body = self.block()
        finally:
            self.scope = None
        self.st.functions.append(
            N.FunctionDecl(name, ctype, params, body, self.file, line, symbols)
        )

    # -- types ---------------------------------------------------------------

    def decl_specifiers(self):
        words = []
        storage = ""
        const = False
        named = None
        if not self.is_type_start():
            raise _Fail(self.tok, f"expected a type before {self.tok.text!r}")
        while self.tok.kind == "id":
            t = self.tok.text
            if t in STORAGE:
                storage = t
                self.pos += 1
            elif t in QUALIFIERS:
                const = const or t == "const"
                self.pos += 1
            elif t in ("struct", "union"):
                named = self.struct_specifier()
            elif t == "enum":
                named = self.enum_specifier()
            elif t in BASE_WORDS:
                words.append(t)
                self.pos += 1
            elif t in self.st.typedefs and named is None and not words:
                named = self.st.typedefs[t]
                self.pos += 1
            elif t in ("__attribute__", "__declspec"):
                self.pos += 1
                self._skip_parens()
            else:
                break
        if named is not None:
            ct = N.CType(named.base, named.size, named.pointer, named.is_float, named.struct, const or named.const)
        elif words:
            ct = self._base_type(words, const)
        else:
            ct = N.CType("int", 4, const=const)  # "unsigned"/"static x" default
        return ct, storage

    def _skip_parens(self):
        if not self.at("("):
            return
        depth = 0
        while True:
            t = self.tok
            if t.kind == "eof":
                raise _Fail(t, "unterminated attribute")
            self.pos += 1
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth -= 1
                if depth == 0:
                    return

    @staticmethod
    def _base_type(words, const):
        spelled = " ".join(words)
        if "double" in words:
            return N.CType(spelled, 8, is_float=True, const=const)
        if "float" in words:
            return N.CType(spelled, 4, is_float=True, const=const)
        if "char" in words:
            return N.CType(spelled, 1, const=const)
        if "short" in words:
            return N.CType(spelled, 2, const=const)
        if "long" in words:
            return N.CType(spelled, 8, const=const)
        if "_Bool" in words:
            return N.CType(spelled, 1, const=const)
        if words == ["void"]:
            return N.CType("void", 1, const=const)
        return N.CType(spelled, 4, const=const)

    def struct_specifier(self):
        kind = self.ident()
        tag = self.ident() if self.tok.kind == "id" else None
        if self.accept("{"):
            fields = []
            while not self.accept("}"):
                if self.tok.kind == "eof":
                    raise _Fail(self.tok, "unterminated struct")
                base, _ = self.decl_specifiers()
                while True:
                    name, ctype, dims, _, line = self.declarator(base)
                    if self.accept(":"):
                        self.conditional()  # bit-field width
                    if name:
                        fields.append(N.VarDecl(name, ctype, dims, None, line))
                    if not self.accept(","):
                        break
                self.expect(";")
            self.st.structs.append(N.StructDef(tag, None, fields, kind))
        if tag is None:
            key = f"<anon{len(self.st.structs) - 1}>"
            return N.CType(key, 8, struct=key)
        return N.CType(f"{kind} {tag}", 8, struct=f"{kind} {tag}")

    def enum_specifier(self):
        self.ident()
        if self.tok.kind == "id":
            self.pos += 1
        if self.accept("{"):
            value = 0
            while not self.accept("}"):
                name = self.ident()
                if self.accept("="):
                    v = eval_const(self.conditional(), self.st.constants)
                    value = v if isinstance(v, int) else value
                self.st.constants[name] = value
                value += 1
                if not self.accept(","):
                    self.expect("}")
                    break
        return N.CType("int", 4)

    def declarator(self, base: N.CType):
        """Returns (name, ctype, dims, params-or-None, line)."""
        ptr = 0
        const = base.const
        while self.at("*"):
            self.pos += 1
            ptr += 1
            while self.tok.kind == "id" and self.tok.text in QUALIFIERS:
                self.pos += 1
        name = None
        line = self.tok.line
        dims = []
        params = None
        inner_ptr = 0
        if self.at("(") and (self.peek().text in ("*", "(") or (self.peek().kind == "id" and not self.is_type_start(self.peek()))):
            self.pos += 1
            while self.accept("*"):
                inner_ptr += 1
            if self.tok.kind == "id":
                name = self.ident()
            while self.at("["):
                self.pos += 1
                self._skip_until("]")
            self.expect(")")
        elif self.tok.kind == "id" and not self.is_type_start():
            line = self.tok.line
            name = self.ident()
        while True:
            if self.accept("["):
                if self.accept("]"):
                    dims.append(None)
                else:
                    while self.tok.kind == "id" and self.tok.text in QUALIFIERS:
                        self.pos += 1
                    dims.append(self.assignment())
                    self.expect("]")
            elif self.at("(") and params is None:
                self.pos += 1
                params = self.parameter_list()
            else:
                break
        while self.tok.kind == "id" and self.tok.text in ("__attribute__", "__asm__", "asm"):
            self.pos += 1
            self._skip_parens()
        if inner_ptr and params is not None:
            params = None  # function pointer: model as a pointer variable
        ctype = N.CType(base.base, base.size, base.pointer + ptr + inner_ptr, base.is_float, base.struct, const)
        return name, ctype, dims, params, line

    def _skip_until(self, closer):
        depth = 0
        while True:
            t = self.tok
            if t.kind == "eof":
                raise _Fail(t, f"missing {closer!r}")
            self.pos += 1
            if t.text in "([{":
                depth += 1
            elif t.text in ")]}":
                if depth == 0 and t.text == closer:
                    return
                depth -= 1

    def parameter_list(self):
        params = []
        if self.accept(")"):
            return params
        if self.at("void") and self.peek().text == ")":
            self.pos += 2
            return params
        while True:
            if self.accept("..."):
                self.expect(")")
                return params
            base, _ = self.decl_specifiers()
            name, ctype, dims, _, line = self.declarator(base)
            params.append(N.VarDecl(name or "", ctype, dims, None, line))
            if self.accept(","):
                continue
            self.expect(")")
            return params

    def type_name(self) -> str:
        base, _ = self.decl_specifiers()
        _, ctype, dims, _, _ = self.declarator(base)
        return ctype.base + " " + "*" * ctype.pointer if ctype.pointer else ctype.base

    # -- statements ----------------------------------------------------------

    def block(self) -> N.Block:
        line = self.expect("{").line
        items = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise _Fail(self.tok, "unterminated block")
            items.append(self.statement())
        self.pos += 1
        return N.Block(items, line)

    def statement(self) -> N.Stmt:
        start = self.pos
        try:
            return self._statement()
        except _Fail as exc:
            self.pos = start
            line = self.toks[start].line
            self._skip_statement(start)
            text = " ".join(t.text for t in self.toks[start:self.pos])
            self.diag(line, f"opaque statement ({exc})")
            return N.Opaque(text, line)

    def _skip_statement(self, start):
        depth = 0
        i = start
        while True:
            t = self.toks[i]
            if t.kind == "eof":
                raise CSyntaxError("cannot recover statement structure", self.file, self.toks[start].line)
            if t.kind == "op":
                if t.text in "([{":
                    depth += 1
                elif t.text in ")]}":
                    if depth == 0:
                        if t.text == "}":
                            if i == start:
                                raise CSyntaxError("unexpected '}'", self.file, t.line)
                            break
                    else:
                        depth -= 1
                        if depth == 0 and t.text == "}":
                            i += 1
                            break
                elif t.text == ";" and depth == 0:
                    i += 1
                    break
            i += 1
        self.pos = i

    def _statement(self) -> N.Stmt:
        t = self.tok
        line = t.line
        if t.kind == "op":
            if t.text == "{":
                return self.block()
            if t.text == ";":
                self.pos += 1
                return N.Empty(line)
        if t.kind == "id":
            kw = t.text
            if kw == "for":
                return self.for_statement()
            if kw == "while":
                self.pos += 1
                self.expect("(")
                cond = self.expression()
                self.expect(")")
                return N.While(cond, self.statement(), line)
            if kw == "do":
                self.pos += 1
                body = self.statement()
                self.expect("while")
                self.expect("(")
                cond = self.expression()
                self.expect(")")
                self.expect(";")
                return N.DoWhile(body, cond, line)
            if kw == "if":
                self.pos += 1
                self.expect("(")
                cond = self.expression()
                self.expect(")")
                then = self.statement()
                other = self.statement() if self.accept("else") else None
                return N.If(cond, then, other, line)
            if kw == "return":
                self.pos += 1
                value = None if self.at(";") else self.expression()
                self.expect(";")
                return N.Return(value, line)
            if kw == "break":
                self.pos += 1
                self.expect(";")
                return N.Break(line)
            if kw == "continue":
                self.pos += 1
                self.expect(";")
                return N.Continue(line)
            if kw == "switch":
                self.pos += 1
                self.expect("(")
                expr = self.expression()
                self.expect(")")
                return N.Switch(expr, self.statement(), line)
            if kw == "case":
                self.pos += 1
                value = self.conditional()
                self.expect(":")
                return N.Labeled("case", value, self._label_target(line), line)
            if kw == "default" and self.peek().text == ":":
                self.pos += 2
                return N.Labeled("default", None, self._label_target(line), line)
            if kw == "goto":
                raise _Fail(t, "goto is not modelled")
            if self.peek().text == ":" and self.peek().kind == "op" and not self.is_type_start():
                self.pos += 2
                return N.Labeled(kw, None, self._label_target(line), line)
            if self.is_type_start() and not self._typedef_used_as_value():
                return self.declaration_statement()
        expr = self.expression()
        self.expect(";")
        return N.ExprStmt(expr, line)

    def _label_target(self, line):
        if self.at("}"):
            return N.Empty(line)
        return self.statement()

    def _typedef_used_as_value(self) -> bool:
        t = self.tok
        if t.text not in self.st.typedefs or t.text in BASE_WORDS:
            return False
        nxt = self.peek()
        return nxt.kind == "op" and nxt.text in ASSIGN_OPS | {"(", "[", ".", "->", "++", "--", ";", ","}

    def declaration_statement(self) -> N.DeclStmt:
        line = self.tok.line
        base, storage = self.decl_specifiers()
        decls = []
        if self.accept(";"):
            return N.DeclStmt(decls, line)
        while True:
            name, ctype, dims, params, dline = self.declarator(base)
            if name is None:
                raise _Fail(self.tok, "declaration without a name")
            if storage == "typedef":
                self.st.typedefs[name] = self._typedef_type(name, ctype, dims)
            elif params is not None:
                self.st.function_names.add(name)
            else:
                init = self.initializer() if self.accept("=") else None
                d = N.VarDecl(name, ctype, dims, init, dline, storage)
                decls.append(d)
                if self.scope is not None:
                    self.scope.setdefault(name, d)
            if not self.accept(","):
                break
        self.expect(";")
        return N.DeclStmt(decls, line)

    def initializer(self):
        if self.accept("{"):
            items = []
            while not self.accept("}"):
                if self.at("."):
                    self.pos += 1
                    self.ident()
                    self.expect("=")
                elif self.at("["):
                    self.pos += 1
                    self.conditional()
                    self.expect("]")
                    self.expect("=")
                items.append(self.initializer())
                if not self.accept(","):
                    self.expect("}")
                    break
            return N.InitList(items)
        return self.assignment()

    def for_statement(self) -> N.For:
        line = self.expect("for").line
        self.expect("(")
        if self.accept(";"):
            init = None
        elif self.is_type_start() and not self._typedef_used_as_value():
            init = self.declaration_statement()
        else:
            iline = self.tok.line
            init = N.ExprStmt(self.expression(), iline)
            self.expect(";")
        cond = None if self.at(";") else self.expression()
        self.expect(";")
        step = None if self.at(")") else self.expression()
        self.expect(")")
        return N.For(init, cond, step, self.statement(), line)

    # -- expressions ---------------------------------------------------------

    def expression(self):
        e = self.assignment()
        if not self.at(","):
            return e
        items = [e]
        while self.accept(","):
            items.append(self.assignment())
        return N.Comma(items)

    def assignment(self):
        lhs = self.conditional()
        t = self.tok
        if t.kind == "op" and t.text in ASSIGN_OPS:
            self.pos += 1
            return N.Assign(t.text, lhs, self.assignment())
        return lhs

    def conditional(self):
        cond = self.binary(1)
        if self.accept("?"):
            then = self.expression()
            self.expect(":")
            return N.Ternary(cond, then, self.conditional())
        return cond

    def binary(self, min_prec):
        left = self.cast()
        while True:
            t = self.tok
            prec = BINARY_PREC.get(t.text) if t.kind == "op" else None
            if prec is None or prec < min_prec:
                return left
            self.pos += 1
            right = self.binary(prec + 1)
            left = N.Binary(t.text, left, right)

    def cast(self):
        if self.at("(") and self.is_type_start(self.peek()):
            self.pos += 1
            tname = self.type_name()
            self.expect(")")
            if self.at("{"):
                raise _Fail(self.tok, "compound literals are not modelled")
            return N.Cast(tname, self.cast())
        return self.unary()

    def unary(self):
        t = self.tok
        if t.kind == "op":
            if t.text in ("++", "--"):
                self.pos += 1
                return N.Unary("pre" + t.text, self.unary())
            if t.text in ("-", "+", "!", "~", "*", "&"):
                self.pos += 1
                return N.Unary(t.text, self.cast())
        if t.kind == "id" and t.text == "sizeof":
            self.pos += 1
            if self.at("(") and self.is_type_start(self.peek()):
                self.pos += 1
                tname = self.type_name()
                self.expect(")")
                return N.SizeOfType(tname)
            return N.Unary("sizeof", self.unary())
        return self.postfix(self.primary())

    def postfix(self, e):
        while True:
            t = self.tok
            if t.kind != "op":
                return e
            if t.text == "[":
                self.pos += 1
                idx = self.expression()
                self.expect("]")
                e = N.Index(e, idx)
            elif t.text == "(":
                self.pos += 1
                args = []
                if not self.accept(")"):
                    while True:
                        args.append(self.assignment())
                        if self.accept(")"):
                            break
                        self.expect(",")
                e = N.Call(e, args)
            elif t.text in (".", "->"):
                self.pos += 1
                e = N.Member(e, self.ident(), t.text == "->")
            elif t.text in ("++", "--"):
                self.pos += 1
                e = N.Unary("post" + t.text, e)
            else:
                return e

    def primary(self):
        t = self.tok
        if t.kind == "id":
            if t.text in BASE_WORDS or t.text in QUALIFIERS or t.text in ("struct", "union", "enum"):
                raise _Fail(t, f"unexpected keyword {t.text!r}")
            self.pos += 1
            return N.Name(t.text)
        if t.kind == "num":
            self.pos += 1
            try:
                return N.Const(t.text, parse_number(t.text))
            except ValueError:
                raise _Fail(t, f"bad number {t.text!r}") from None
        if t.kind == "str":
            parts = []
            while self.tok.kind == "str":
                parts.append(self.tok.text)
                self.pos += 1
            return N.Const(" ".join(parts), "".join(p[1:-1] for p in parts))
        if t.kind == "char":
            self.pos += 1
            return N.Const(t.text, _char_value(t.text))
        if self.accept("("):
            if self.at("{"):
                raise _Fail(self.tok, "statement expressions are not modelled")
            e = self.expression()
            self.expect(")")
            return e
        raise _Fail(t, f"unexpected {t.text or 'end of file'!r}")


def parse_text(text: str, path: str = "<string>", state: _State | None = None) -> N.SourceUnit:
    """Parse a single in-memory translation unit."""
    state = state or _State()
    lex = tokenize(text, path)
    state.diagnostics.extend(lex.diagnostics)
    for name, value in lex.defines.items():
        try:
            state.constants.setdefault(name, parse_number(value))
        except ValueError:
            pass
    Parser(lex.tokens, path, state).parse_unit()
    return _unit(state, [(path, text)], lex.annotations)


def _unit(state, files, annotations) -> N.SourceUnit:
    return N.SourceUnit(
        files=files,
        functions=list(state.functions),
        diagnostics=list(state.diagnostics),
        globals=dict(state.globals),
        constants=dict(state.constants),
        structs=list(state.structs),
        annotations=list(annotations),
        function_names=set(state.function_names),
    )


def parse_source(paths) -> N.SourceUnit:
    """Parse C files into one unit; symbols are shared across files."""
    state = _State()
    files = []
    annotations = []
    for p in paths:
        path = Path(p)
        text = path.read_text(encoding="utf-8")
        files.append((str(p), text))
        lex = tokenize(text, str(p))
        state.diagnostics.extend(lex.diagnostics)
        for name, value in lex.defines.items():
            try:
                state.constants.setdefault(name, parse_number(value))
            except ValueError:
                pass
        annotations.extend(lex.annotations)
        Parser(lex.tokens, str(p), state).parse_unit()
    return _unit(state, files, annotations)
