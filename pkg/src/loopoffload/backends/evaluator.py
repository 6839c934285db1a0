"""Functional evaluator for the C subset.

Runs an original loop (the all-CPU reference) and the generated kernels of an
artifact over identical seeded sample data, so the two final memory states can
be compared value for value. Memory is lazy: every array element and scalar
starts at a value derived from ``(seed, name, index)``, which lets loops over
arrays of unknown extent run without allocation bookkeeping.

Arithmetic follows C where it matters for equivalence: integer division and
remainder truncate toward zero, and stores into integer objects truncate. All
floating point uses Python floats for both sides.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field

from ..errors import OffloadError
from ..frontend import nodes as N
from ..frontend.loops import array_base, const_table, resolve
from ..frontend.parser import eval_const, parse_text

DEFAULT_STEP_LIMIT = 2_000_000


class EvalError(OffloadError):
    """The evaluator cannot run a construct, or the run exceeded its step limit."""


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


class _Return(Exception):
    pass


def sample_value(seed: int, name: str, key, is_float: bool):
    """Deterministic starting value for one memory cell."""
    h = hashlib.blake2b(f"{seed}|{name}|{key}".encode(), digest_size=8).digest()
    n = int.from_bytes(h, "little")
    if is_float:
        return (n % (1 << 21)) / float(1 << 20) - 1.0  # [-1, 1) on a 2^-20 grid
    return 1 + n % 16


@dataclass
class Buffer:
    name: str
    is_float: bool
    seed: int
    fields: dict = field(default_factory=dict)  # record field -> is_float
    cells: dict = field(default_factory=dict)

    def load(self, key):
        if key not in self.cells:
            self.cells[key] = sample_value(self.seed, self.name, key, self._float(key))
        return self.cells[key]

    def store(self, key, value):
        self.cells[key] = _coerce(value, self._float(key))
        return self.cells[key]

    def _float(self, key) -> bool:
        if isinstance(key, tuple) and len(key) == 2 and isinstance(key[1], str):
            return self.fields.get(key[1], True)
        return self.is_float


@dataclass
class Record:
    """One element of an array of records, addressed lazily."""

    buffer: Buffer
    index: object


def _coerce(value, is_float):
    if isinstance(value, Record):
        raise EvalError("whole-record assignment is not supported")
    if is_float:
        return float(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise EvalError("non-finite value stored into an integer")
        return int(value)
    return int(value)


def _is_float_type(ctype: N.CType) -> bool:
    return ctype.is_float or any(w in ctype.base for w in ("float", "double"))


def _record_fields(ctype, unit) -> dict:
    if not ctype.struct or unit is None:
        return {}
    s = unit.struct_named(ctype.base)
    if s is None:
        return {}
    return {f.name: _is_float_type(f.ctype) for f in s.fields}


def _math(fn):
    def call(*args):
        try:
            return float(fn(*args))
        except (ValueError, OverflowError):
            return math.nan
    return call


def _cdiv(a, b):
    if b == 0:
        raise EvalError("integer division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _fdiv(a, b):
    if b == 0:
        return math.copysign(math.inf, a) * math.copysign(1.0, b) if a else math.nan
    return a / b


BUILTINS = {
    "sqrt": _math(math.sqrt), "sqrtf": _math(math.sqrt),
    "rsqrt": _math(lambda x: 1.0 / math.sqrt(x)),
    "sin": _math(math.sin), "sinf": _math(math.sin),
    "cos": _math(math.cos), "cosf": _math(math.cos),
    "tan": _math(math.tan), "tanf": _math(math.tan),
    "asin": _math(math.asin), "acos": _math(math.acos),
    "atan": _math(math.atan), "atanf": _math(math.atan),
    "atan2": _math(math.atan2), "atan2f": _math(math.atan2),
    "sinh": _math(math.sinh), "cosh": _math(math.cosh), "tanh": _math(math.tanh),
    "exp": _math(math.exp), "expf": _math(math.exp), "exp2": _math(lambda x: 2.0 ** x),
    "log": _math(math.log), "logf": _math(math.log),
    "log2": _math(math.log2), "log10": _math(math.log10),
    "pow": _math(math.pow), "powf": _math(math.pow),
    "cbrt": _math(lambda x: math.copysign(abs(x) ** (1.0 / 3.0), x)),
    "fabs": _math(math.fabs), "fabsf": _math(math.fabs),
    "floor": _math(math.floor), "floorf": _math(math.floor),
    "ceil": _math(math.ceil), "ceilf": _math(math.ceil),
    "round": _math(round), "trunc": _math(math.trunc),
    "fmod": _math(math.fmod), "hypot": _math(math.hypot), "hypotf": _math(math.hypot),
    "fmin": _math(min), "fminf": _math(min), "fmax": _math(max), "fmaxf": _math(max),
    "abs": lambda x: abs(x), "min": lambda a, b: min(a, b), "max": lambda a, b: max(a, b),
}

_SIZES = {"char": 1, "short": 2, "int": 4, "long": 8, "float": 4, "double": 8}


def _cast(type_name: str, v):
    if "*" in type_name:
        return v
    if "float" in type_name or "double" in type_name:
        return float(v)
    if any(w in type_name for w in ("int", "char", "short", "long", "unsigned", "signed", "size_t")):
        return _coerce(v, False)
    return v


class _Var:
    __slots__ = ("ctype", "value", "decl")

    def __init__(self, ctype, value, decl=None):
        self.ctype, self.value, self.decl = ctype, value, decl


class Machine:
    """Tree-walking interpreter over one shared memory image."""

    def __init__(self, seed=0, constants=None, unit=None, step_limit=DEFAULT_STEP_LIMIT):
        self.seed = seed
        self.constants = dict(constants or {})
        self.unit = unit
        self.step_limit = step_limit
        self.steps = 0
        self.buffers: dict[str, Buffer] = {}
        self.scalars: dict[str, object] = {}
        self.iterations: dict[int, int] = {}  # id(loop node) -> body executions
        self.scopes: list[dict] = []

    # memory ----------------------------------------------------------------

    def buffer(self, name, is_float, fields=None) -> Buffer:
        b = self.buffers.get(name)
        if b is None:
            b = self.buffers[name] = Buffer(name, is_float, self.seed, dict(fields or {}))
        return b

    def scalar_initial(self, name, is_float):
        if name not in self.scalars:
            self.scalars[name] = sample_value(self.seed, name, "scalar", is_float)
        return self.scalars[name]

    def bind(self, decl: N.VarDecl, scope: dict, alias: str | None = None):
        """Bind ``decl`` in ``scope`` to shared memory under ``alias``."""
        name = alias or decl.name
        is_float = _is_float_type(decl.ctype)
        fields = _record_fields(decl.ctype, self.unit)
        if decl.is_array_like:
            scope[decl.name] = _Var(decl.ctype, self.buffer(name, is_float, fields), decl)
        elif decl.ctype.struct:
            scope[decl.name] = _Var(decl.ctype, Record(self.buffer(name, is_float, fields), 0), decl)
        else:
            scope[decl.name] = _Var(decl.ctype, self.scalar_initial(name, is_float), decl)

    def lookup(self, name):
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def _tick(self):
        self.steps += 1
        if self.steps > self.step_limit:
            raise EvalError(f"step limit of {self.step_limit} exceeded")

    # statements ------------------------------------------------------------

    def run(self, s):
        self._tick()
        if isinstance(s, N.Block):
            self.scopes.append({})
            try:
                for item in s.items:
                    self.run(item)
            finally:
                self.scopes.pop()
        elif isinstance(s, N.ExprStmt):
            self.eval(s.expr)
        elif isinstance(s, N.DeclStmt):
            for d in s.decls:
                self.declare(d)
        elif isinstance(s, N.If):
            if self.truth(s.cond):
                self.run(s.then)
            elif s.other is not None:
                self.run(s.other)
        elif isinstance(s, N.For):
            self.scopes.append({})
            try:
                if s.init is not None:
                    self.run(s.init)
                while s.cond is None or self.truth(s.cond):
                    if self._body(s):
                        break
                    if s.step is not None:
                        self.eval(s.step)
            finally:
                self.scopes.pop()
        elif isinstance(s, N.While):
            while self.truth(s.cond):
                if self._body(s):
                    break
        elif isinstance(s, N.DoWhile):
            while True:
                if self._body(s):
                    break
                if not self.truth(s.cond):
                    break
        elif isinstance(s, N.Switch):
            self._switch(s)
        elif isinstance(s, N.Break):
            raise _Break()
        elif isinstance(s, N.Continue):
            raise _Continue()
        elif isinstance(s, N.Return):
            raise _Return()
        elif isinstance(s, N.Labeled):
            self.run(s.stmt)
        elif isinstance(s, N.Empty):
            pass
        elif isinstance(s, N.Opaque):
            raise EvalError(f"cannot evaluate unparsed statement: {s.text[:40]}")
        else:
            raise EvalError(f"cannot evaluate {type(s).__name__}")

    def _body(self, loop) -> bool:
        """Run one iteration; True when the loop was broken out of."""
        self.iterations[id(loop)] = self.iterations.get(id(loop), 0) + 1
        try:
            self.run(loop.body)
        except _Break:
            return True
        except _Continue:
            pass
        return False

    def _switch(self, s):
        v = self.eval(s.expr)
        items = s.body.items if isinstance(s.body, N.Block) else [s.body]
        start = None
        for k, item in enumerate(items):
            if isinstance(item, N.Labeled) and item.label == "case" and self.eval(item.value) == v:
                start = k
                break
        if start is None:
            for k, item in enumerate(items):
                if isinstance(item, N.Labeled) and item.label == "default":
                    start = k
                    break
        if start is None:
            return
        self.scopes.append({})
        try:
            for item in items[start:]:
                self.run(item)
        except _Break:
            pass
        finally:
            self.scopes.pop()

    def declare(self, d: N.VarDecl):
        scope = self.scopes[-1]
        is_float = _is_float_type(d.ctype)
        if d.is_array_like:
            # a local array: private storage, distinct from any shared buffer
            key = f"{d.name}@local"
            buf = Buffer(key, is_float, self.seed, _record_fields(d.ctype, self.unit))
            scope[d.name] = _Var(d.ctype, buf, d)
            if isinstance(d.init, N.InitList):
                for k, item in enumerate(d.init.items):
                    buf.store(k, self.eval(item))
            elif d.init is not None:
                raise EvalError(f"cannot initialise array {d.name} from an expression")
            return
        if d.ctype.struct:
            key = f"{d.name}@local"
            scope[d.name] = _Var(d.ctype, Record(Buffer(key, is_float, self.seed, _record_fields(d.ctype, self.unit)), 0), d)
            return
        value = self.eval(d.init) if d.init is not None else 0
        scope[d.name] = _Var(d.ctype, _coerce(value, is_float), d)

    def truth(self, e) -> bool:
        return bool(self.eval(e))

    # expressions -----------------------------------------------------------

    def eval(self, e):
        if isinstance(e, N.Const):
            if isinstance(e.value, str):
                raise EvalError("string literals are not evaluated")
            return e.value
        if isinstance(e, N.Name):
            v = self.lookup(e.name)
            if v is not None:
                return v.value
            if e.name in self.constants:
                return self.constants[e.name]
            raise EvalError(f"unbound name {e.name!r}")
        if isinstance(e, (N.Index, N.Member)):
            buf, key = self.address(e)
            if isinstance(key, tuple) and len(key) == 2 and isinstance(key[1], str):
                return buf.load(key)
            if buf.fields:
                return Record(buf, key)
            return buf.load(key)
        if isinstance(e, N.Assign):
            return self.assign(e)
        if isinstance(e, N.Unary):
            return self.unary(e)
        if isinstance(e, N.Binary):
            return self.binary(e.op, e.left, e.right)
        if isinstance(e, N.Ternary):
            return self.eval(e.then) if self.truth(e.cond) else self.eval(e.other)
        if isinstance(e, N.Cast):
            return _cast(e.type_name, self.eval(e.expr))
        if isinstance(e, N.SizeOfType):
            return _SIZES.get(e.type_name.split()[-1], 8 if "*" in e.type_name else 4)
        if isinstance(e, N.Comma):
            v = 0
            for x in e.exprs:
                v = self.eval(x)
            return v
        if isinstance(e, N.Call):
            fname = e.func.name if isinstance(e.func, N.Name) else None
            fn = BUILTINS.get(fname)
            if fn is None:
                raise EvalError(f"call to {fname or 'a computed function'} is not evaluated")
            return fn(*[self.eval(a) for a in e.args])
        raise EvalError(f"cannot evaluate {type(e).__name__}")

    def address(self, e):
        """(buffer, key) for an array element or record field."""
        if isinstance(e, N.Member):
            if e.arrow:
                raise EvalError("pointer member access is not evaluated")
            base = self.eval(e.base)
            if not isinstance(base, Record):
                raise EvalError(f"member access on a non-record value (.{e.field})")
            return base.buffer, (base.index, e.field)
        name, depth = array_base(e)
        if name is None:
            raise EvalError("indexing a computed address is not evaluated")
        var = self.lookup(name)
        if var is None or not isinstance(var.value, Buffer):
            raise EvalError(f"{name} is not an array")
        indices = []
        x = e
        while isinstance(x, N.Index):
            indices.append(self.eval(x.index))
            x = x.base
        indices.reverse()
        for i in indices:
            if not isinstance(i, int):
                raise EvalError(f"non-integer subscript on {name}")
        dims = var.decl.dims if var.decl is not None else []
        if len(indices) == 1:
            return var.value, indices[0]
        strides = []
        for d in dims[1:len(indices)]:
            v = eval_const(d, self.constants) if d is not None else None
            if not isinstance(v, int):
                return var.value, tuple(indices)
            strides.append(v)
        if len(strides) != len(indices) - 1:
            return var.value, tuple(indices)
        flat = indices[0]
        for s, i in zip(strides, indices[1:]):
            flat = flat * s + i
        return var.value, flat

    def _store(self, target, value):
        if isinstance(target, N.Name):
            var = self.lookup(target.name)
            if var is None:
                raise EvalError(f"assignment to unbound name {target.name!r}")
            if isinstance(var.value, (Buffer, Record)):
                raise EvalError(f"assignment to aggregate {target.name}")
            var.value = _coerce(value, _is_float_type(var.ctype))
            return var.value
        if isinstance(target, (N.Index, N.Member)):
            buf, key = self.address(target)
            return buf.store(key, value)
        raise EvalError("assignment to a non-lvalue")

    def assign(self, e: N.Assign):
        if e.op == "=":
            return self._store(e.target, self.eval(e.value))
        op = e.op[:-1]
        return self._store(e.target, self._arith(op, self.eval(e.target), self.eval(e.value)))

    def unary(self, e: N.Unary):
        op = e.op
        if op in ("pre++", "pre--", "post++", "post--"):
            old = self.eval(e.operand)
            new = self._store(e.operand, old + (1 if op.endswith("++") else -1))
            return new if op.startswith("pre") else old
        if op == "sizeof":
            return 4
        if op in ("*", "&"):
            raise EvalError("pointer operators are not evaluated")
        v = self.eval(e.operand)
        if op == "-":
            return -v
        if op == "+":
            return v
        if op == "!":
            return int(not v)
        if op == "~":
            return ~int(v)
        raise EvalError(f"unary {op} is not evaluated")

    def binary(self, op, left, right):
        if op == "&&":
            return int(self.truth(left) and self.truth(right))
        if op == "||":
            return int(self.truth(left) or self.truth(right))
        return self._arith(op, self.eval(left), self.eval(right))

    @staticmethod
    def _arith(op, a, b):
        fl = isinstance(a, float) or isinstance(b, float)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return _fdiv(float(a), float(b)) if fl else _cdiv(a, b)
        if op == "%":
            if fl:
                raise EvalError("% on floating operands")
            return a - b * _cdiv(a, b)
        if op == "<":
            return int(a < b)
        if op == ">":
            return int(a > b)
        if op == "<=":
            return int(a <= b)
        if op == ">=":
            return int(a >= b)
        if op == "==":
            return int(a == b)
        if op == "!=":
            return int(a != b)
        if fl:
            raise EvalError(f"bitwise {op} on floating operands")
        if op == "&":
            return a & b
        if op == "|":
            return a | b
        if op == "^":
            return a ^ b
        if op == "<<":
            return a << b
        if op == ">>":
            return a >> b
        raise EvalError(f"binary {op} is not evaluated")


# -- reference vs kernel -----------------------------------------------------


def _bits(v):
    if isinstance(v, float):
        return ("f", struct.pack("<d", v))
    return ("i", v)


def snapshot(machine: Machine, names) -> dict:
    """Comparable view of the named shared objects."""
    out = {}
    for name in sorted(names):
        if name in machine.buffers:
            cells = machine.buffers[name].cells
            out[name] = {repr(k): _bits(v) for k, v in sorted(cells.items(), key=lambda kv: repr(kv[0]))}
        elif name in machine.scalars:
            out[name] = _bits(machine.scalars[name])
    return out


def run_reference(loops, unit, seed=0, step_limit=DEFAULT_STEP_LIMIT) -> Machine:
    """Execute the original loops in source order against seeded memory."""
    m = Machine(seed, const_table(unit), unit, step_limit)
    for lp in sorted(loops, key=lambda x: x.id):
        if lp.node is None:
            raise EvalError(f"loop {lp.id} has no statement tree to evaluate")
        scope = {}
        names = set()
        for n in N.walk(lp.node):
            if isinstance(n, N.Name):
                names.add(n.name)
        local = {n.name for n in N.walk(lp.node) if isinstance(n, N.VarDecl)}
        for name in sorted(names - local):
            decl = resolve(name, lp.function, unit)
            if decl is not None:
                m.bind(decl, scope)
        m.scopes = [scope]
        m.run(lp.node)
        # written scalars live in the scope; publish them to shared memory
        for name, var in scope.items():
            if not isinstance(var.value, (Buffer, Record)):
                m.scalars[name] = var.value
    return m


def run_kernels(artifact, unit=None, seed=0, step_limit=DEFAULT_STEP_LIMIT) -> Machine:
    """Parse ``artifact.kernel_text`` and run its kernels in pattern order."""
    kunit = parse_text(artifact.kernel_text, f"{artifact.name}.kernel.cl")
    funcs = {f.name: f for f in kunit.functions}
    m = Machine(seed, const_table(kunit), kunit if kunit.structs else unit, step_limit)
    for kname in artifact.kernel_names:
        f = funcs.get(kname)
        if f is None:
            raise EvalError(f"kernel {kname} missing from generated text")
        scope = {}
        io = {}
        for p in f.params:
            if p.name.endswith("_io") and p.ctype.pointer:
                base = p.name[:-3]
                is_float = _is_float_type(p.ctype)
                io[base] = is_float
                buf = Buffer(p.name, is_float, seed)
                buf.cells[0] = m.scalar_initial(base, is_float)
                scope[p.name] = _Var(p.ctype, buf, p)
            else:
                m.bind(p, scope)
        m.scopes = [scope]
        m.run(f.body)
        for base in io:
            m.scalars[base] = scope[base + "_io"].value.cells[0]
    return m


def check_equivalence(artifact, loops, unit, seed=0, step_limit=DEFAULT_STEP_LIMIT) -> bool:
    """True when kernels and original loops leave identical interface state."""
    names = [iv.variable for iv in artifact.interface]
    ref = snapshot(run_reference(loops, unit, seed, step_limit), names)
    ker = snapshot(run_kernels(artifact, unit, seed, step_limit), names)
    return ref == ker
