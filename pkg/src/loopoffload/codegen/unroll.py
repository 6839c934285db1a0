"""Loop unrolling by a fixed factor, with a remainder loop when needed."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import UnrollError
from ..frontend import nodes as N
from ..frontend.loops import TripEstimate, canonical_for, static_trip


@dataclass(frozen=True)
class UnrollPlan:
    replicas: int
    main_iterations: int
    remainder: int

    @property
    def covered(self) -> int:
        return self.replicas * self.main_iterations + self.remainder


def unroll_plan(trip: int, b: int) -> UnrollPlan:
    if b < 1:
        raise UnrollError(f"unroll factor must be >= 1, got {b}")
    return UnrollPlan(b, trip // b, trip % b)


def _offset(var: str, delta: int):
    if delta == 0:
        return N.Name(var)
    op = "+" if delta > 0 else "-"
    return N.Binary(op, N.Name(var), N.Const(str(abs(delta)), abs(delta)))


def _substitute(body, var: str, delta: int):
    if delta == 0:
        return N.rewrite(body, lambda n: None)
    return N.rewrite(
        body, lambda n: _offset(var, delta) if isinstance(n, N.Name) and n.name == var else None
    )


def _check_body(body, var: str):
    for n in N.walk(body):
        target = None
        if isinstance(n, N.Assign):
            target = n.target
        elif isinstance(n, N.Unary) and n.op in ("pre++", "pre--", "post++", "post--", "&"):
            target = n.operand
        if isinstance(target, N.Name) and target.name == var:
            raise UnrollError(f"induction variable {var} is modified inside the loop body")
        if isinstance(n, N.VarDecl) and n.name == var:
            raise UnrollError(f"induction variable {var} is shadowed inside the loop body")
    _check_jumps(body)


def _check_jumps(s, in_loop=False, in_switch=False):
    if isinstance(s, (N.Break,)) and not (in_loop or in_switch):
        raise UnrollError("break out of an unrolled loop")
    if isinstance(s, N.Continue) and not in_loop:
        raise UnrollError("continue in an unrolled loop")
    if isinstance(s, N.Return):
        raise UnrollError("return inside an unrolled loop")
    for c in N.children(s):
        if isinstance(c, N.Stmt):
            _check_jumps(
                c,
                in_loop or isinstance(s, N.LOOP_TYPES),
                in_switch or isinstance(s, N.Switch),
            )


def apply_unroll(loop, trip: TripEstimate, b: int, constants=None):
    """Replicate the body ``b`` times per iteration.

    Replica ``k`` sees the induction variable offset by ``k * step``. The main
    loop guard tests the last replica's index, so a plain copy of the original
    loop mops up the ``trip % b`` tail. The tail loop is omitted only when the
    loop's own constant bounds prove ``b`` divides the trip count.
    ``b == 1`` returns ``loop`` unchanged.
    """
    if b < 1:
        raise UnrollError(f"unroll factor must be >= 1, got {b}")
    if b == 1:
        return loop
    constants = constants or {}
    can = canonical_for(loop, constants)
    if can is None:
        raise UnrollError("only counted for-loops with a constant step can be unrolled")
    if not ((can.step > 0 and can.rel in ("<", "<=")) or (can.step < 0 and can.rel in (">", ">="))):
        raise UnrollError("loop direction does not match its exit test")
    _check_body(loop.body, can.var)

    replicas = []
    for k in range(b):
        rep = _substitute(loop.body, can.var, k * can.step)
        replicas.append(rep if isinstance(rep, N.Block) else N.Block([rep], loop.line))
    last = (b - 1) * can.step
    guard = N.Binary(can.rel, _offset(can.var, last), N.rewrite(can.bound, lambda n: None))
    stride = abs(b * can.step)
    main_step = N.Assign("+=" if can.step > 0 else "-=", N.Name(can.var), N.Const(str(stride), stride))

    proven = static_trip(loop, constants)
    exact = proven.value is not None and proven.value % b == 0
    if trip.value is not None and proven.value is not None and trip.value != proven.value:
        exact = False  # annotation disagrees with the bounds; keep the guarded tail
    if exact:
        return N.For(loop.init, guard, main_step, N.Block(replicas, loop.line), loop.line)

    init = loop.init
    main = N.For(None, guard, main_step, N.Block(replicas, loop.line), loop.line)
    tail = N.For(
        None,
        N.rewrite(loop.cond, lambda n: None),
        N.rewrite(loop.step, lambda n: None),
        N.rewrite(loop.body, lambda n: None),
        loop.line,
    )
    return N.Block([init, main, tail], loop.line)
