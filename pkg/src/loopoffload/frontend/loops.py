"""Loop inventory: discovery, trip knowledge, per-loop body profiles."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from typing import Optional

from ..errors import AnnotationError, OffloadError
from . import nodes as N
from . import printer
from .parser import eval_const

DEFAULT_TRIP = 1000
LOOP_KINDS = {N.For: "for", N.While: "while", N.DoWhile: "do-while"}
TRIP_SOURCES = ("static_const", "annotation", "unknown")

_TRIP_DIRECTIVE = re.compile(r"^\s*trip\s*=\s*(\S*)\s*$")


@dataclass(frozen=True)
class TripEstimate:
    source: str = "unknown"
    value: Optional[int] = None

    def __post_init__(self):
        if self.source not in TRIP_SOURCES:
            raise ValueError(f"bad trip source {self.source!r}")
        if (self.value is None) != (self.source == "unknown"):
            raise ValueError("trip value must be present iff source is not 'unknown'")
        if self.value is not None and self.value < 1:
            raise ValueError("trip value must be >= 1")

    def resolved(self, default_trip: int = DEFAULT_TRIP) -> int:
        return self.value if self.value is not None else default_trip


@dataclass(frozen=True)
class ArrayRef:
    name: str
    element_bytes: int
    extent_elements: Optional[int] = None


@dataclass(frozen=True)
class BodyProfile:
    ops_add: int = 0
    ops_mul: int = 0
    ops_div: int = 0
    ops_other: int = 0
    access_exprs: int = 0
    arrays: tuple = ()
    scalars_bytes: int = 0

    @property
    def ops_per_iter(self) -> int:
        return self.ops_add + self.ops_mul + self.ops_div + self.ops_other


@dataclass(frozen=True)
class LoopInfo:
    id: int
    kind: str
    location: tuple  # (file, line)
    parent_id: Optional[int]
    depth: int
    body_profile: BodyProfile
    trip: TripEstimate
    node: object = field(default=None, compare=False, repr=False)
    function: object = field(default=None, compare=False, repr=False)


# -- symbol helpers ----------------------------------------------------------


def resolve(name: str, func, unit) -> Optional[N.VarDecl]:
    if func is not None and name in func.symbols:
        return func.symbols[name]
    return unit.globals.get(name) if unit is not None else None


def array_base(e) -> tuple:
    """(base name or None, index depth) of an Index chain."""
    depth = 0
    while isinstance(e, N.Index):
        e = e.base
        depth += 1
    return (e.name if isinstance(e, N.Name) else None), depth


def const_table(unit) -> dict:
    return dict(unit.constants) if unit is not None else {}


# -- canonical for-loops -----------------------------------------------------


@dataclass
class Canonical:
    """``for (var = start; var REL bound; var += step)`` with a constant step."""

    var: str
    start: object
    rel: str  # relation with var on the left: <, <=, >, >=, !=
    bound: object
    step: int
    declared: Optional[N.VarDecl] = None


_FLIP = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "!=": "!="}


def canonical_for(loop: N.For, constants: dict) -> Optional[Canonical]:
    if not isinstance(loop, N.For) or loop.cond is None or loop.step is None:
        return None
    var = start = declared = None
    init = loop.init
    if isinstance(init, N.ExprStmt) and isinstance(init.expr, N.Assign):
        a = init.expr
        if a.op == "=" and isinstance(a.target, N.Name):
            var, start = a.target.name, a.value
    elif isinstance(init, N.DeclStmt) and len(init.decls) == 1:
        d = init.decls[0]
        if d.init is not None and not d.dims and d.ctype.pointer == 0:
            var, start, declared = d.name, d.init, d
    if var is None:
        return None
    c = loop.cond
    if not isinstance(c, N.Binary) or c.op not in _FLIP:
        return None
    if isinstance(c.left, N.Name) and c.left.name == var:
        rel, bound = c.op, c.right
    elif isinstance(c.right, N.Name) and c.right.name == var:
        rel, bound = _FLIP[c.op], c.left
    else:
        return None
    if _mentions(bound, var):
        return None
    step = _step_of(loop.step, var, constants)
    if not step:
        return None
    return Canonical(var, start, rel, bound, step, declared)


def _mentions(e, var) -> bool:
    return any(isinstance(n, N.Name) and n.name == var for n in N.walk(e))


def _step_of(e, var, constants) -> Optional[int]:
    if isinstance(e, N.Unary) and isinstance(e.operand, N.Name) and e.operand.name == var:
        if e.op in ("pre++", "post++"):
            return 1
        if e.op in ("pre--", "post--"):
            return -1
    if isinstance(e, N.Assign) and isinstance(e.target, N.Name) and e.target.name == var:
        if e.op in ("+=", "-="):
            k = eval_const(e.value, constants)
            if isinstance(k, int):
                return k if e.op == "+=" else -k
        if e.op == "=" and isinstance(e.value, N.Binary) and e.value.op in ("+", "-"):
            b = e.value
            if isinstance(b.left, N.Name) and b.left.name == var:
                k = eval_const(b.right, constants)
                if isinstance(k, int):
                    return k if b.op == "+" else -k
            if b.op == "+" and isinstance(b.right, N.Name) and b.right.name == var:
                k = eval_const(b.left, constants)
                if isinstance(k, int):
                    return k
    return None


def trip_count(start: int, rel: str, bound: int, step: int) -> Optional[int]:
    """Iterations of a monotone counted loop, or None when it never terminates cleanly."""
    if step > 0 and rel in ("<", "<="):
        span = bound - start + (1 if rel == "<=" else 0)
        return max(0, -(-span // step))
    if step < 0 and rel in (">", ">="):
        span = start - bound + (1 if rel == ">=" else 0)
        return max(0, -(-span // -step))
    if rel == "!=":
        diff = bound - start
        if diff % step == 0 and diff // step >= 0:
            return diff // step
    return None


def static_trip(loop, constants) -> TripEstimate:
    can = canonical_for(loop, constants) if isinstance(loop, N.For) else None
    if can is None:
        return TripEstimate()
    s = eval_const(can.start, constants)
    b = eval_const(can.bound, constants)
    if not isinstance(s, int) or not isinstance(b, int):
        return TripEstimate()
    n = trip_count(s, can.rel, b, can.step)
    if n is None or n < 1:
        return TripEstimate()
    return TripEstimate("static_const", n)


# -- op counting -------------------------------------------------------------


@dataclass
class OpCounts:
    add: int = 0
    mul: int = 0
    div: int = 0
    other: int = 0

    def scaled(self, k: int) -> "OpCounts":
        return OpCounts(self.add * k, self.mul * k, self.div * k, self.other * k)

    def __iadd__(self, o):
        self.add += o.add
        self.mul += o.mul
        self.div += o.div
        self.other += o.other
        return self

    @property
    def total(self) -> int:
        return self.add + self.mul + self.div + self.other


_ADD = {"+", "-", "+=", "-=", "pre++", "pre--", "post++", "post--"}
_MUL = {"*", "*="}
_DIV = {"/", "%", "/=", "%="}


def _classify(op: str, counts: OpCounts):
    if op in _ADD:
        counts.add += 1
    elif op in _MUL:
        counts.mul += 1
    elif op in _DIV:
        counts.div += 1
    else:
        counts.other += 1


def expr_ops(e, counts: OpCounts):
    for n in N.walk(e):
        if isinstance(n, N.Binary):
            _classify(n.op, counts)
        elif isinstance(n, N.Assign):
            if n.op != "=":
                _classify(n.op, counts)
        elif isinstance(n, N.Unary):
            if n.op in ("-", "!", "~"):
                counts.other += 1
            elif n.op.startswith(("pre", "post")):
                _classify(n.op, counts)
        elif isinstance(n, (N.Ternary, N.Call)):
            counts.other += 1


def stmt_ops(s, counts: OpCounts, loop_scale, include_headers: bool):
    """Accumulate ops of a statement tree.

    Nested loops contribute ``loop_scale(loop) * ops(body)``; their headers
    are only counted when ``include_headers`` is set (static hardware view).
    """
    if s is None:
        return
    if isinstance(s, N.Opaque):
        counts.other += 1
        return
    if isinstance(s, N.LOOP_TYPES):
        inner = OpCounts()
        stmt_ops(s.body, inner, loop_scale, include_headers)
        if include_headers:
            if isinstance(s, N.For):
                if s.init is not None:
                    stmt_ops(s.init, inner, loop_scale, include_headers)
                for e in (s.cond, s.step):
                    if e is not None:
                        expr_ops(e, inner)
            else:
                expr_ops(s.cond, inner)
        counts += inner.scaled(loop_scale(s))
        return
    if isinstance(s, (N.ExprStmt,)):
        expr_ops(s.expr, counts)
    elif isinstance(s, N.DeclStmt):
        for d in s.decls:
            expr_ops(d, counts)
    elif isinstance(s, N.Return):
        if s.value is not None:
            expr_ops(s.value, counts)
    elif isinstance(s, N.If):
        expr_ops(s.cond, counts)
        stmt_ops(s.then, counts, loop_scale, include_headers)
        stmt_ops(s.other, counts, loop_scale, include_headers)
    elif isinstance(s, N.Switch):
        expr_ops(s.expr, counts)
        stmt_ops(s.body, counts, loop_scale, include_headers)
    elif isinstance(s, N.Labeled):
        stmt_ops(s.stmt, counts, loop_scale, include_headers)
    elif isinstance(s, N.Block):
        for item in s.items:
            stmt_ops(item, counts, loop_scale, include_headers)


def access_expressions(s) -> list:
    """Outermost array-reference expressions, distinct by text, in order."""
    seen = {}
    stack = [(s, False)]
    while stack:
        n, inside = stack.pop()
        if isinstance(n, N.Index) and not inside:
            seen.setdefault(printer.expr(n), n)
            # the chain a[i][j] is one reference; its index expressions may hold others
            e = n
            while isinstance(e, N.Index):
                stack.append((e.index, False))
                e = e.base
            stack.append((e, False))
            continue
        stack.extend((c, False) for c in reversed(N.children(n)))
    return list(seen.values())


def referenced_names(s) -> list:
    out = []
    seen = set()
    for n in N.walk(s):
        if isinstance(n, N.Name) and n.name not in seen:
            seen.add(n.name)
            out.append(n.name)
        elif isinstance(n, N.VarDecl) and n.name not in seen:
            seen.add(n.name)
            out.append(n.name)
    return out


def element_bytes(decl: N.VarDecl, depth: int) -> int:
    levels = len(decl.dims) + decl.ctype.pointer
    if depth >= levels:
        return decl.ctype.size if decl.ctype.struct is None else 8
    return 8


def extent_elements(decl: N.VarDecl, constants) -> Optional[int]:
    if not decl.dims:
        return None
    total = 1
    for d in decl.dims:
        v = eval_const(d, constants) if d is not None else None
        if not isinstance(v, int) or v < 1:
            return None
        total *= v
    return total


def profile_of(loop, func, unit, loop_scale) -> BodyProfile:
    counts = OpCounts()
    stmt_ops(loop.body, counts, loop_scale, include_headers=False)
    refs = access_expressions(loop.body)
    constants = const_table(unit)
    arrays = {}
    for r in refs:
        name, depth = array_base(r)
        if name is None or name in arrays:
            continue
        d = resolve(name, func, unit)
        if d is None:
            arrays[name] = ArrayRef(name, 8, None)
        else:
            arrays[name] = ArrayRef(name, element_bytes(d, depth), extent_elements(d, constants))
    scalars = 0
    for name in referenced_names(loop.body):
        if name in arrays:
            continue
        d = resolve(name, func, unit)
        if d is not None and not d.is_array_like:
            scalars += d.ctype.size if d.ctype.struct is None else 8
    return BodyProfile(
        ops_add=counts.add,
        ops_mul=counts.mul,
        ops_div=counts.div,
        ops_other=counts.other,
        access_exprs=len(refs),
        arrays=tuple(arrays.values()),
        scalars_bytes=scalars,
    )


# -- discovery ---------------------------------------------------------------


def _collect(unit):
    """(node, function, parent node, depth) for every loop, in document order."""
    out = []
    for func in unit.functions:
        stack = [(func.body, None, 0)]
        while stack:
            n, parent, depth = stack.pop()
            if isinstance(n, N.LOOP_TYPES):
                out.append((n, func, parent, depth))
                kids = [(c, n, depth + 1) for c in N.children(n)]
            else:
                kids = [(c, parent, depth) for c in N.children(n)]
            stack.extend(reversed(kids))
    return out


def _build(unit, trips: dict, default_trip: int) -> list:
    found = _collect(unit)
    ids = {id(n): k + 1 for k, (n, *_rest) in enumerate(found)}

    def scale(node):
        return trips[id(node)].resolved(default_trip)

    loops = []
    for n, func, parent, depth in found:
        loops.append(
            LoopInfo(
                id=ids[id(n)],
                kind=LOOP_KINDS[type(n)],
                location=(func.file, n.line),
                parent_id=ids[id(parent)] if parent is not None else None,
                depth=depth,
                body_profile=profile_of(n, func, unit, scale),
                trip=trips[id(n)],
                node=n,
                function=func,
            )
        )
    return loops


def discover_loops(unit, default_trip: int = DEFAULT_TRIP) -> list:
    """Every for/while/do-while statement as a :class:`LoopInfo`, in source order."""
    constants = const_table(unit)
    trips = {id(n): static_trip(n, constants) for n, *_ in _collect(unit)}
    return _build(unit, trips, default_trip)


def parse_annotation(body: str) -> int:
    m = _TRIP_DIRECTIVE.match(body)
    if not m:
        raise AnnotationError(f"unrecognised offload directive {body.strip()!r}")
    raw = m.group(1)
    if not raw.isdigit() or int(raw) < 1:
        raise AnnotationError(f"trip must be a positive integer, got {raw!r}")
    return int(raw)


def _attached_lines(unit) -> dict:
    """(file, annotation line) -> first code line after it."""
    texts = dict(unit.files)
    out = {}
    for a in unit.annotations:
        lines = texts.get(a.file, "").splitlines()
        k = a.line  # 0-based index of the following line
        while k < len(lines):
            stripped = lines[k].strip()
            if stripped and not stripped.startswith("//"):
                break
            k += 1
        out[(a.file, a.line)] = k + 1
    return out


def apply_annotations(loops, unit, default_trip: int = DEFAULT_TRIP) -> list:
    """Override trips from ``// offload: trip=N`` comments and refresh profiles.

    Loops left unknown keep ``TripEstimate('unknown')``; consumers resolve them
    to ``default_trip``.
    """
    targets = _attached_lines(unit)
    by_line = {}
    for a in unit.annotations:
        value = parse_annotation(a.body)
        by_line.setdefault((a.file, targets[(a.file, a.line)]), value)
    if not loops or loops[0].node is None:
        return list(loops)
    trips = {}
    claimed = set()
    for lp in loops:
        key = tuple(lp.location)
        if key in by_line and key not in claimed:
            claimed.add(key)  # outermost loop on the line takes the directive
            trips[id(lp.node)] = TripEstimate("annotation", by_line[key])
        else:
            trips[id(lp.node)] = lp.trip
    rebuilt = _build(unit, trips, default_trip)
    if [r.id for r in rebuilt] != [lp.id for lp in loops]:
        raise OffloadError("loop list does not belong to this source unit")
    return rebuilt


# -- inventory import/export -------------------------------------------------


def loop_to_dict(lp: LoopInfo) -> dict:
    bp = lp.body_profile
    return {
        "id": lp.id,
        "kind": lp.kind,
        "location": {"file": lp.location[0], "line": lp.location[1]},
        "parent_id": lp.parent_id,
        "depth": lp.depth,
        "body_profile": {
            "ops_add": bp.ops_add,
            "ops_mul": bp.ops_mul,
            "ops_div": bp.ops_div,
            "ops_other": bp.ops_other,
            "access_exprs": bp.access_exprs,
            "arrays": [asdict(a) for a in bp.arrays],
            "scalars_bytes": bp.scalars_bytes,
        },
        "trip": {"source": lp.trip.source, "value": lp.trip.value},
    }


def loop_from_dict(d: dict) -> LoopInfo:
    try:
        bp = d["body_profile"]
        arrays = tuple(ArrayRef(a["name"], int(a["element_bytes"]), a.get("extent_elements")) for a in bp["arrays"])
        for a in arrays:
            if a.element_bytes not in (1, 2, 4, 8):
                raise ValueError(f"element_bytes of {a.name} must be 1, 2, 4 or 8")
        profile = BodyProfile(
            int(bp["ops_add"]), int(bp["ops_mul"]), int(bp["ops_div"]), int(bp["ops_other"]),
            int(bp["access_exprs"]), arrays, int(bp["scalars_bytes"]),
        )
        if min(profile.ops_add, profile.ops_mul, profile.ops_div, profile.ops_other,
               profile.access_exprs, profile.scalars_bytes) < 0:
            raise ValueError("profile counts must be >= 0")
        loc = d["location"]
        if d["kind"] not in LOOP_KINDS.values():
            raise ValueError(f"bad loop kind {d['kind']!r}")
        return LoopInfo(
            id=int(d["id"]),
            kind=d["kind"],
            location=(loc["file"], int(loc["line"])),
            parent_id=d.get("parent_id"),
            depth=int(d["depth"]),
            body_profile=profile,
            trip=TripEstimate(d["trip"]["source"], d["trip"].get("value")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise OffloadError(f"invalid loop record: {exc}") from None


def export_inventory(loops) -> str:
    return json.dumps([loop_to_dict(lp) for lp in loops], indent=2, sort_keys=True)


def import_inventory(text: str) -> list:
    data = json.loads(text)
    if not isinstance(data, list):
        raise OffloadError("loop inventory must be a JSON array")
    loops = [loop_from_dict(d) for d in data]
    check_inventory(loops)
    return loops


def check_inventory(loops):
    ids = [lp.id for lp in loops]
    if ids != list(range(1, len(loops) + 1)):
        raise OffloadError("loop ids must be dense, 1-based and in document order")
    by_id = {lp.id: lp for lp in loops}
    for lp in loops:
        if lp.parent_id is None:
            if lp.depth != 0:
                raise OffloadError(f"root loop {lp.id} must have depth 0")
            continue
        parent = by_id.get(lp.parent_id)
        if parent is None or parent.id >= lp.id:
            raise OffloadError(f"loop {lp.id} has an invalid parent")
        if lp.depth != parent.depth + 1:
            raise OffloadError(f"loop {lp.id} depth is inconsistent with its parent")


def enclosing_trips(loop, loops, default_trip: int = DEFAULT_TRIP) -> list:
    """Resolved trips of the ancestors, innermost first."""
    by_id = {lp.id: lp for lp in loops}
    out = []
    p = loop.parent_id
    while p is not None:
        anc = by_id[p]
        out.append(anc.trip.resolved(default_trip))
        p = anc.parent_id
    return out


def subtree_size(loop_id, loops) -> int:
    kids = {}
    for lp in loops:
        kids.setdefault(lp.parent_id, []).append(lp.id)
    total, stack = 0, [loop_id]
    while stack:
        k = stack.pop()
        total += 1
        stack.extend(kids.get(k, []))
    return total


__all__ = [
    "DEFAULT_TRIP", "TripEstimate", "ArrayRef", "BodyProfile", "LoopInfo",
    "discover_loops", "apply_annotations", "export_inventory", "import_inventory",
    "canonical_for", "static_trip", "trip_count", "enclosing_trips",
]
