"""Render statement/expression trees back to C text."""

from __future__ import annotations

from . import nodes as N

_PREC = {
    ",": 1, "=": 2, "?": 3, "||": 4, "&&": 5, "|": 6, "^": 7, "&": 8,
    "==": 9, "!=": 9, "<": 10, ">": 10, "<=": 10, ">=": 10,
    "<<": 11, ">>": 11, "+": 12, "-": 12, "*": 13, "/": 13, "%": 13,
}
_UNARY = 14
_POSTFIX = 15


def _prec(e) -> int:
    if isinstance(e, N.Comma):
        return 1
    if isinstance(e, N.Assign):
        return 2
    if isinstance(e, N.Ternary):
        return 3
    if isinstance(e, N.Binary):
        return _PREC[e.op]
    if isinstance(e, N.Unary):
        return _POSTFIX if e.op.startswith("post") else _UNARY
    if isinstance(e, (N.Cast, N.SizeOfType)):
        return _UNARY
    return 16


def expr(e, parent: int = 0) -> str:
    s = _expr(e)
    return f"({s})" if _prec(e) < parent else s


def _expr(e) -> str:
    if isinstance(e, N.Name):
        return e.name
    if isinstance(e, N.Const):
        return e.text
    if isinstance(e, N.Index):
        return f"{expr(e.base, _POSTFIX)}[{expr(e.index)}]"
    if isinstance(e, N.Call):
        return f"{expr(e.func, _POSTFIX)}({', '.join(expr(a, 2) for a in e.args)})"
    if isinstance(e, N.Member):
        return f"{expr(e.base, _POSTFIX)}{'->' if e.arrow else '.'}{e.field}"
    if isinstance(e, N.Unary):
        if e.op.startswith("post"):
            return expr(e.operand, _POSTFIX) + e.op[4:]
        if e.op.startswith("pre"):
            return e.op[3:] + expr(e.operand, _UNARY)
        if e.op == "sizeof":
            return f"sizeof({expr(e.operand)})"
        inner = expr(e.operand, _UNARY)
        # keep "- -x" from fusing into "--x"
        sep = " " if e.op in "-+&" and inner.startswith(e.op) else ""
        return f"{e.op}{sep}{inner}"
    if isinstance(e, N.Binary):
        p = _PREC[e.op]
        return f"{expr(e.left, p)} {e.op} {expr(e.right, p + 1)}"
    if isinstance(e, N.Assign):
        return f"{expr(e.target, _UNARY)} {e.op} {expr(e.value, 2)}"
    if isinstance(e, N.Ternary):
        return f"{expr(e.cond, 4)} ? {expr(e.then)} : {expr(e.other, 3)}"
    if isinstance(e, N.Cast):
        return f"({e.type_name}){expr(e.expr, _UNARY)}"
    if isinstance(e, N.SizeOfType):
        return f"sizeof({e.type_name})"
    if isinstance(e, N.Comma):
        return ", ".join(expr(x, 2) for x in e.exprs)
    if isinstance(e, N.InitList):
        return "{" + ", ".join(expr(x, 2) for x in e.items) + "}"
    raise TypeError(f"not an expression: {type(e).__name__}")


def declarator(d: N.VarDecl) -> str:
    dims = "".join(f"[{'' if x is None else expr(x)}]" for x in d.dims)
    init = f" = {expr(d.init, 2)}" if d.init is not None else ""
    return "*" * d.ctype.pointer + d.name + dims + init


def decl(d: N.VarDecl) -> str:
    prefix = f"{d.storage} " if d.storage and d.storage != "typedef" else ""
    const = "const " if d.ctype.const else ""
    return f"{prefix}{const}{d.ctype.base} {declarator(d)}"


def decl_stmt(s: N.DeclStmt) -> str:
    if not s.decls:
        return ";"
    first = s.decls[0]
    prefix = f"{first.storage} " if first.storage and first.storage != "typedef" else ""
    const = "const " if first.ctype.const else ""
    return f"{prefix}{const}{first.ctype.base} " + ", ".join(declarator(d) for d in s.decls) + ";"


def stmt(s, indent: int = 0, unit: str = "    ") -> str:
    return "\n".join(_stmt(s, indent, unit))


def _stmt(s, indent, unit):
    pad = unit * indent
    if isinstance(s, N.Block):
        inner = []
        for item in s.items:
            inner.extend(_stmt(item, indent + 1, unit))
        return [pad + "{", *inner, pad + "}"]
    if isinstance(s, N.ExprStmt):
        return [pad + expr(s.expr) + ";"]
    if isinstance(s, N.DeclStmt):
        return [pad + decl_stmt(s)]
    if isinstance(s, N.Empty):
        return [pad + ";"]
    if isinstance(s, N.Return):
        return [pad + ("return;" if s.value is None else f"return {expr(s.value)};")]
    if isinstance(s, N.Break):
        return [pad + "break;"]
    if isinstance(s, N.Continue):
        return [pad + "continue;"]
    if isinstance(s, N.Opaque):
        return [pad + s.text]
    if isinstance(s, N.If):
        lines = _headed(pad + f"if ({expr(s.cond)})", s.then, indent, unit)
        if s.other is not None:
            if isinstance(s.other, N.If):
                rest = _stmt(s.other, indent, unit)
                rest[0] = rest[0].lstrip()
                lines[-1] += " else " + rest[0]
                lines.extend(rest[1:])
            else:
                tail = _headed("else", s.other, indent, unit)
                lines[-1] += " " + tail[0]
                lines.extend(tail[1:])
        return lines
    if isinstance(s, N.For):
        if s.init is None:
            init = ";"
        elif isinstance(s.init, N.DeclStmt):
            init = decl_stmt(s.init)
        else:
            init = expr(s.init.expr) + ";"
        cond = " " + expr(s.cond) if s.cond is not None else ""
        step = " " + expr(s.step) if s.step is not None else ""
        return _headed(pad + f"for ({init}{cond};{step})", s.body, indent, unit)
    if isinstance(s, N.While):
        return _headed(pad + f"while ({expr(s.cond)})", s.body, indent, unit)
    if isinstance(s, N.DoWhile):
        lines = _headed(pad + "do", s.body, indent, unit)
        lines[-1] += f" while ({expr(s.cond)});"
        return lines
    if isinstance(s, N.Switch):
        return _headed(pad + f"switch ({expr(s.expr)})", s.body, indent, unit)
    if isinstance(s, N.Labeled):
        if s.label == "case":
            head = f"case {expr(s.value)}:"
        elif s.label == "default":
            head = "default:"
        else:
            head = f"{s.label}:"
        return [pad + head, *_stmt(s.stmt, indent + 1, unit)]
    raise TypeError(f"not a statement: {type(s).__name__}")


def _headed(head, body, indent, unit):
    if isinstance(body, N.Block):
        inner = []
        for item in body.items:
            inner.extend(_stmt(item, indent + 1, unit))
        return [head + " {", *inner, unit * indent + "}"]
    return [head, *_stmt(body, indent + 1, unit)]
