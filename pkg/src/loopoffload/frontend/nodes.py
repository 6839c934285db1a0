"""Statement and expression tree for the supported C subset.

Nodes compare by identity: two structurally equal loops in different places
are different loops.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional


class Node:
    pass


# -- expressions -------------------------------------------------------------


@dataclass(eq=False)
class Name(Node):
    name: str


@dataclass(eq=False)
class Const(Node):
    text: str
    value: object  # int | float | str


@dataclass(eq=False)
class Index(Node):
    base: Node
    index: Node


@dataclass(eq=False)
class Call(Node):
    func: Node
    args: list


@dataclass(eq=False)
class Member(Node):
    base: Node
    field: str
    arrow: bool = False


@dataclass(eq=False)
class Unary(Node):
    # "-", "+", "!", "~", "*", "&", "sizeof", "pre++", "pre--", "post++", "post--"
    op: str
    operand: Node


@dataclass(eq=False)
class Binary(Node):
    op: str
    left: Node
    right: Node


@dataclass(eq=False)
class Assign(Node):
    op: str  # "=", "+=", ...
    target: Node
    value: Node


@dataclass(eq=False)
class Ternary(Node):
    cond: Node
    then: Node
    other: Node


@dataclass(eq=False)
class Cast(Node):
    type_name: str
    expr: Node


@dataclass(eq=False)
class SizeOfType(Node):
    type_name: str


@dataclass(eq=False)
class Comma(Node):
    exprs: list


@dataclass(eq=False)
class InitList(Node):
    items: list


# -- declarations ------------------------------------------------------------


@dataclass(eq=False)
class CType:
    base: str  # "float", "unsigned int", "struct kValues", typedef name
    size: int  # bytes of the base type, clamped to 1/2/4/8
    pointer: int = 0
    is_float: bool = False
    struct: Optional[str] = None  # struct tag or typedef name when a record
    const: bool = False

    def spelled(self) -> str:
        return self.base + " " + "*" * self.pointer if self.pointer else self.base


@dataclass(eq=False)
class VarDecl(Node):
    name: str
    ctype: CType
    dims: list = field(default_factory=list)  # list of expr | None
    init: Optional[Node] = None
    line: int = 0
    storage: str = ""

    @property
    def is_array_like(self) -> bool:
        return bool(self.dims) or self.ctype.pointer > 0


@dataclass(eq=False)
class StructDef:
    tag: Optional[str]
    typedef_name: Optional[str]
    fields: list
    kind: str = "struct"

    @property
    def type_name(self) -> str:
        return self.typedef_name or f"{self.kind} {self.tag}"


# -- statements --------------------------------------------------------------


@dataclass(eq=False)
class Stmt(Node):
    pass


@dataclass(eq=False)
class Block(Stmt):
    items: list
    line: int = 0


@dataclass(eq=False)
class ExprStmt(Stmt):
    expr: Node
    line: int = 0


@dataclass(eq=False)
class DeclStmt(Stmt):
    decls: list
    line: int = 0


@dataclass(eq=False)
class If(Stmt):
    cond: Node
    then: Stmt
    other: Optional[Stmt] = None
    line: int = 0


@dataclass(eq=False)
class For(Stmt):
    init: Optional[Stmt]
    cond: Optional[Node]
    step: Optional[Node]
    body: Stmt
    line: int = 0


@dataclass(eq=False)
class While(Stmt):
    cond: Node
    body: Stmt
    line: int = 0


@dataclass(eq=False)
class DoWhile(Stmt):
    body: Stmt
    cond: Node
    line: int = 0


@dataclass(eq=False)
class Return(Stmt):
    value: Optional[Node] = None
    line: int = 0


@dataclass(eq=False)
class Break(Stmt):
    line: int = 0


@dataclass(eq=False)
class Continue(Stmt):
    line: int = 0


@dataclass(eq=False)
class Switch(Stmt):
    expr: Node
    body: Stmt
    line: int = 0


@dataclass(eq=False)
class Labeled(Stmt):
    label: str  # "case", "default" or a goto label
    value: Optional[Node]
    stmt: Stmt
    line: int = 0


@dataclass(eq=False)
class Empty(Stmt):
    line: int = 0


@dataclass(eq=False)
class Opaque(Stmt):
    """A construct the parser could not model; kept as raw token text."""

    text: str
    line: int = 0


LOOP_TYPES = (For, While, DoWhile)


@dataclass(eq=False)
class FunctionDecl:
    name: str
    return_type: CType
    params: list
    body: Block
    file: str
    line: int
    symbols: dict = field(default_factory=dict)  # params and every local decl


@dataclass
class SourceUnit:
    files: list  # (path, text)
    functions: list
    diagnostics: list
    globals: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    structs: list = field(default_factory=list)
    annotations: list = field(default_factory=list)
    function_names: set = field(default_factory=set)

    def struct_named(self, type_name):
        for s in self.structs:
            if type_name in (s.typedef_name, f"{s.kind} {s.tag}"):
                return s
        return None


def children(node):
    """Direct child nodes in source order."""
    if isinstance(node, (Name, Const, SizeOfType, Empty, Break, Continue, Opaque)):
        return []
    if isinstance(node, Index):
        return [node.base, node.index]
    if isinstance(node, Call):
        return [node.func, *node.args]
    if isinstance(node, Member):
        return [node.base]
    if isinstance(node, Unary):
        return [node.operand]
    if isinstance(node, Binary):
        return [node.left, node.right]
    if isinstance(node, Assign):
        return [node.target, node.value]
    if isinstance(node, Ternary):
        return [node.cond, node.then, node.other]
    if isinstance(node, Cast):
        return [node.expr]
    if isinstance(node, (Comma,)):
        return list(node.exprs)
    if isinstance(node, InitList):
        return list(node.items)
    if isinstance(node, VarDecl):
        return [d for d in node.dims if d is not None] + ([node.init] if node.init else [])
    if isinstance(node, Block):
        return list(node.items)
    if isinstance(node, ExprStmt):
        return [node.expr]
    if isinstance(node, DeclStmt):
        return list(node.decls)
    if isinstance(node, If):
        return [node.cond, node.then] + ([node.other] if node.other else [])
    if isinstance(node, For):
        return [x for x in (node.init, node.cond, node.step, node.body) if x is not None]
    if isinstance(node, While):
        return [node.cond, node.body]
    if isinstance(node, DoWhile):
        return [node.body, node.cond]
    if isinstance(node, Return):
        return [node.value] if node.value is not None else []
    if isinstance(node, Switch):
        return [node.expr, node.body]
    if isinstance(node, Labeled):
        return ([node.value] if node.value is not None else []) + [node.stmt]
    raise TypeError(f"unknown node {type(node).__name__}")


def walk(node):
    """Pre-order traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def rewrite(node, fn):
    """Copy ``node`` top-down; ``fn(n)`` may return a replacement for ``n``.

    Replacements are used as-is (not descended into). Everything else is a
    fresh node, so the result never aliases the input tree.
    """
    r = fn(node)
    if r is not None:
        return r
    if isinstance(node, list):
        return [rewrite(x, fn) for x in node]
    if not isinstance(node, Node):
        return node
    changes = {}
    for f in dataclasses.fields(node):
        v = getattr(node, f.name)
        if isinstance(v, (Node, list)):
            changes[f.name] = rewrite(v, fn)
    return dataclasses.replace(node, **changes)
