import json
import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from loopoffload.backends.evaluator import Machine, check_equivalence
from loopoffload.codegen import (
    STAGE_MARKERS,
    apply_unroll,
    generate_artifact,
    markers_in_order,
    unroll_plan,
    write_artifact,
)
from loopoffload.errors import CodegenError, UnrollError, UnsupportedLoop
from loopoffload.fixtures import fixture_sources
from loopoffload.frontend import TripEstimate, apply_annotations, discover_loops, nodes as N, parse_source, parse_text
from loopoffload.frontend import printer

from conftest import loops_of, random_loop_program

COPY = """
#define N 8
float a[N], b[N];
void copy(void) { int i; for (i = 0; i < N; i++) { a[i] = b[i]; } }
"""

THREE = """
#define N 64
float a[N], b[N], c[N];
float s;
void work(void) {
    int i;
    for (i = 0; i < N; i++) a[i] = b[i] * 2.0f;
    for (i = 0; i < N; i++) s += a[i];
    for (i = 0; i < N; i++) c[i] = a[i] - b[i];
}
"""


def test_copy_loop_interface_and_markers():
    unit, loops = loops_of(COPY)
    art = generate_artifact(loops, unit)
    iface = {iv.variable: (iv.direction, iv.byte_size) for iv in art.interface if iv.kind == "array"}
    assert iface == {"a": ("to_host", 32), "b": ("to_device", 32)}
    assert markers_in_order(art.host_text)
    assert art.stage_markers == STAGE_MARKERS and len(STAGE_MARKERS) == 10


def test_marker_offsets_strictly_increase():
    unit, loops = loops_of(THREE)
    art = generate_artifact(loops, unit)
    offsets = [m.start() for m in re.finditer(r"OFFLOAD STAGE (\d+)/10", art.host_text)]
    steps = [int(m.group(1)) for m in re.finditer(r"OFFLOAD STAGE (\d+)/10", art.host_text)]
    assert steps == list(range(1, 11))
    assert offsets == sorted(offsets)


def test_two_loop_pattern_shares_setup():
    unit, loops = loops_of(THREE)
    art = generate_artifact([loops[0], loops[2]], unit)
    assert art.pattern_loops == (1, 3)
    assert art.kernel_text.count("__kernel void") == 2
    for m in STAGE_MARKERS:
        assert art.host_text.count(m) == 1


def test_written_scalar_goes_both_ways():
    unit, loops = loops_of(THREE)
    art = generate_artifact([loops[1]], unit)
    s = next(iv for iv in art.interface if iv.variable == "s")
    assert s.direction == "both"


def test_every_array_once_in_interface():
    unit, loops = loops_of(THREE)
    art = generate_artifact(loops[:1] + loops[2:], unit)
    names = [iv.variable for iv in art.interface]
    assert len(names) == len(set(names))
    assert {"a", "b", "c"} <= set(names)


def test_b1_kernel_body_matches_source():
    unit, loops = loops_of(COPY)
    art = generate_artifact(loops, unit, b=1)
    assert "a[i] = b[i];" in art.kernel_text
    assert apply_unroll(loops[0].node, loops[0].trip, 1) is loops[0].node


def test_unresolved_symbol_is_codegen_error():
    unit, loops = loops_of("void f(void){ int i; for (i = 0; i < 4; i++) ghost[i] = 0; }")
    with pytest.raises(CodegenError):
        generate_artifact(loops, unit)


def test_user_function_call_is_unsupported():
    unit, loops = loops_of("""
    float a[4]; float g(float x);
    void f(void){ int i; for (i = 0; i < 4; i++) a[i] = g(a[i]); }""")
    with pytest.raises(UnsupportedLoop):
        generate_artifact(loops, unit)


def test_nested_pair_in_one_pattern_is_rejected():
    unit, loops = loops_of("""
    double m[4][4];
    void f(void){ int i, j; for (i = 0; i < 4; i++) for (j = 0; j < 4; j++) m[i][j] = 0; }""")
    with pytest.raises(UnsupportedLoop):
        generate_artifact(loops, unit)


def test_write_artifact_layout(tmp_path):
    unit, loops = loops_of(THREE)
    art = generate_artifact([loops[0], loops[2]], unit, b=2)
    paths = write_artifact(art, tmp_path)
    assert paths["kernel"].name == "pattern_1_3.kernel.cl"
    assert paths["host"].name == "pattern_1_3.host.c"
    manifest = json.loads(paths["interface"].read_text())
    assert manifest["pattern_loops"] == [1, 3] and manifest["unroll"] == 2


def test_unroll_plan_examples():
    p = unroll_plan(10, 4)
    assert (p.replicas, p.main_iterations, p.remainder) == (4, 2, 2)
    p = unroll_plan(8, 2)
    assert (p.main_iterations, p.remainder) == (4, 0)


def _counted_loop(trip, body="n += 1;"):
    text = f"void f(void) {{ int i; int n = 0; for (i = 0; i < {trip}; i++) {{ {body} }} }}"
    unit = parse_text(text)
    loop = discover_loops(unit)[0]
    return unit, loop


def body_executions(trip, b):
    """Body executions of the unrolled loop, counted by the evaluator."""
    unit, loop = _counted_loop(trip)
    new = apply_unroll(loop.node, loop.trip, b)
    func = unit.functions[0]
    body = N.rewrite(func.body, lambda n: new if n is loop.node else None)
    m = Machine(0, {}, unit)
    m.scopes = [{}]
    m.run(body)
    loops_run = [n for n in N.walk(new) if isinstance(n, N.LOOP_TYPES)]
    main = loops_run[0]
    tail = loops_run[1] if len(loops_run) > 1 else None
    return m.iterations.get(id(main), 0), (m.iterations.get(id(tail), 0) if tail else None), new


def test_unroll_10_by_4_emits_tail_of_2():
    main, tail, _ = body_executions(10, 4)
    assert (main, tail) == (2, 2)


def test_unroll_8_by_2_has_no_tail():
    main, tail, new = body_executions(8, 2)
    assert (main, tail) == (4, None)
    assert isinstance(new, N.For)


@given(st.integers(1, 64), st.integers(1, 8))
def test_unroll_executes_trip_bodies(trip, b):
    plan = unroll_plan(trip, b)
    assert plan.replicas * plan.main_iterations + plan.remainder == trip
    if b == 1:
        return
    main, tail, _ = body_executions(trip, b)
    assert main == plan.main_iterations
    assert main * b + (tail or 0) == trip


def test_unroll_rejects_induction_writes():
    unit, loop = _counted_loop(16, "i += 2;")
    with pytest.raises(UnrollError):
        apply_unroll(loop.node, loop.trip, 2)


def test_b1_is_textual_identity():
    unit, loop = _counted_loop(12)
    before = printer.stmt(loop.node)
    after = printer.stmt(apply_unroll(loop.node, TripEstimate("static_const", 12), 1))
    assert before == after


@pytest.mark.parametrize("b", [1, 2, 3, 5])
def test_kernels_match_cpu_reference(b):
    unit, loops = loops_of(THREE)
    art = generate_artifact([loops[0], loops[2]], unit, b)
    assert check_equivalence(art, [loops[0], loops[2]], unit, seed=7)


@pytest.mark.parametrize("seed", range(0, 40, 7))
def test_random_programs_preserve_semantics(seed):
    unit, loops = loops_of(random_loop_program(seed))
    for b in (1, 4):
        assert check_equivalence(generate_artifact(loops, unit, b), loops, unit, seed)


def test_tdfir_top_loops_preserve_semantics():
    unit = parse_source(fixture_sources("tdfir"))
    loops = apply_annotations(discover_loops(unit), unit)
    by_id = {lp.id: lp for lp in loops}
    # the per-filter inner product loops picked by the demo search
    for ids in [(1,), (29,), (1, 29)]:
        chosen = [by_id[i] for i in ids]
        art = generate_artifact(chosen, unit)
        assert markers_in_order(art.host_text)
        assert check_equivalence(art, chosen, unit, seed=3, step_limit=5_000_000)
