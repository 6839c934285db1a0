import json
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pytest

from loopoffload.backends import (
    BASELINE_ID,
    ExternalBackend,
    ExternalBackendConfig,
    LoopTiming,
    SimBackend,
    SimSidecar,
    load_backend_config,
    load_sidecar,
    parse_sidecar,
    parse_time_token,
    render_command,
    run_external,
    set_time,
    sidecar_to_dict,
    simulate_time,
)
from loopoffload.codegen import generate_artifact
from loopoffload.errors import (
    CompileError,
    InvalidConfig,
    MeasurementTimeout,
    RunError,
    SidecarError,
    TimeTokenError,
)
from loopoffload.explorer import SearchConfig, run_search
from loopoffload.fixtures import fixture_sidecar, fixture_sources
from loopoffload.frontend import apply_annotations, discover_loops, parse_source
from loopoffload.pipeline import ArtifactPlanner
from loopoffload.resources import EfficiencyScore, load_cost_model

from conftest import loops_of

MOCK = Path(__file__).with_name("mock_toolchain.py")
PY = shlex.quote(sys.executable)


def two_loop_sidecar(**kw):
    return SimSidecar(100.0, {1: LoopTiming(0.5), 3: LoopTiming(0.5)}, **kw)


def test_empty_set_is_cpu_time():
    assert simulate_time((), two_loop_sidecar()).wall_time == 100.0


def test_product_of_gains():
    assert set_time({1, 3}, two_loop_sidecar()) == 25.0


def test_explicit_wins_and_interference_adds():
    side = two_loop_sidecar(interference={frozenset({1, 3}): 5.0}, explicit={frozenset({1}): 70.0})
    assert set_time({1}, side) == 70.0
    assert set_time({1, 3}, side) == 30.0


def test_unknown_loop_is_sidecar_error():
    with pytest.raises(SidecarError):
        set_time({2}, two_loop_sidecar())


def test_non_positive_formula_time_rejected():
    side = two_loop_sidecar(interference={frozenset({1, 3}): -30.0})
    with pytest.raises(SidecarError):
        set_time({1, 3}, side)


def test_invalid_sets_are_flagged():
    side = two_loop_sidecar(invalid=frozenset({frozenset({3})}))
    assert not simulate_time({3}, side).output_valid
    assert simulate_time({1}, side).output_valid


@pytest.mark.parametrize("doc", [
    {"cpu_time_ms": 0, "per_loop": {}},
    {"cpu_time_ms": 10, "per_loop": {"1": {"gain": 1.0}}},
    {"cpu_time_ms": 10, "per_loop": {"1": {"gain": 0.1, "overhead_ms": -1}}},
    {"cpu_time_ms": 10, "per_loop": {}, "interference": {"1,2,3": 1.0}},
])
def test_sidecar_validation(doc):
    with pytest.raises(SidecarError):
        parse_sidecar(doc)


def test_sidecar_round_trip():
    side = load_sidecar(fixture_sidecar("tdfir"))
    assert parse_sidecar(sidecar_to_dict(side)) == side


def test_demo_sidecars_echo_published_ratios():
    tdfir = load_sidecar(fixture_sidecar("tdfir"))
    mriq = load_sidecar(fixture_sidecar("mriq"))
    assert tdfir.cpu_time_ms / min(tdfir.explicit.values()) == pytest.approx(4.0, abs=1e-3)
    assert mriq.cpu_time_ms / min(mriq.explicit.values()) == pytest.approx(7.1, abs=1e-3)
    assert "not a hardware measurement" in tdfir.note


def test_simulator_deterministic_across_threads():
    side = load_sidecar(fixture_sidecar("mriq"))
    sets = [frozenset({4}), frozenset({5}), frozenset({4, 10}), frozenset({4, 5, 10})] * 25
    with ThreadPoolExecutor(8) as pool:
        got = list(pool.map(lambda s: simulate_time(s, side, 1), sets))
    assert got == [simulate_time(s, side, 1) for s in sets]


def test_baseline_has_id_zero():
    assert SimBackend(two_loop_sidecar()).baseline().pattern_id == BASELINE_ID


# -- external adapter --------------------------------------------------------


def test_time_token_parse():
    ms, rest = parse_time_token("hello\nOFFLOAD_TIME_MS=123.5\nbye\n")
    assert ms == 123.5 and rest == "hello\nbye"


@pytest.mark.parametrize("out", ["nothing here", "OFFLOAD_TIME_MS=1\nOFFLOAD_TIME_MS=2", "OFFLOAD_TIME_MS=0",
                                 "OFFLOAD_TIME_MS=-4", "offload_time_ms=3"])
def test_time_token_errors(out):
    with pytest.raises(TimeTokenError):
        parse_time_token(out)


def test_render_command_keeps_spaces_in_paths():
    argv = render_command("cc -o out {kernel} '{host}'", {"kernel": "/a b/k.cl", "host": "/c d/h.c"})
    assert argv == ["cc", "-o", "out", "/a b/k.cl", "/c d/h.c"]


def test_config_requires_placeholders():
    with pytest.raises(InvalidConfig):
        ExternalBackendConfig("cc {kernel}", "run {workdir}")
    with pytest.raises(InvalidConfig):
        ExternalBackendConfig("cc {kernel} {host}", "run")
    with pytest.raises(InvalidConfig):
        ExternalBackendConfig("cc {kernel} {host}", "run {workdir}", timeout_s=0)


def test_load_backend_config(tmp_path):
    p = tmp_path / "b.json"
    p.write_text(json.dumps({"compile_cmd": "c {kernel} {host}", "run_cmd": "r {workdir}", "bogus": 1}))
    with pytest.raises(InvalidConfig):
        load_backend_config(p)
    p.write_text(json.dumps({"compile_cmd": "c {kernel} {host}", "run_cmd": "r {workdir}"}))
    assert load_backend_config(p, repeats=3).repeats == 3


def mock_config(sidecar, compile_extra="", run_extra="", **kw):
    return ExternalBackendConfig(
        compile_cmd=f"{PY} {MOCK} compile {{kernel}} {{host}} {compile_extra}",
        run_cmd=f"{PY} {MOCK} run {{workdir}} {sidecar} {run_extra}",
        baseline_cmd=f"{PY} {MOCK} baseline {{workdir}} {sidecar}",
        **kw,
    )


@pytest.fixture
def three_loops():
    unit, loops = loops_of("""
    #define N 64
    float a[N], b[N], c[N];
    void work(void) { int i;
      for (i = 0; i < N; i++) a[i] = b[i] * 2.0f;
      for (i = 0; i < N; i++) b[i] = b[i] + 1.0f;
      for (i = 0; i < N; i++) c[i] = a[i] - b[i];
    }""")
    return unit, loops


@pytest.fixture
def side_file(tmp_path):
    doc = {"cpu_time_ms": 100.0,
           "per_loop": {"1": {"gain": 0.5}, "2": {"gain": 0.1}, "3": {"gain": 0.4}},
           "interference": {"1,3": -10.0}}
    p = tmp_path / "side.json"
    p.write_text(json.dumps(doc))
    return p


def test_run_external_reads_time(tmp_path, three_loops, side_file):
    unit, loops = three_loops
    art = generate_artifact([loops[0]], unit)
    r = run_external(art, mock_config(side_file), tmp_path / "w", 5)
    assert (r.pattern_id, r.wall_time, r.output_valid, r.backend) == (5, 50.0, True, "external")


def test_compile_failure_is_compile_error(tmp_path, three_loops, side_file):
    unit, loops = three_loops
    art = generate_artifact([loops[0]], unit)
    with pytest.raises(CompileError):
        run_external(art, mock_config(side_file, compile_extra="--fail-on 1"), tmp_path / "w")


def test_missing_token_and_timeout(tmp_path, three_loops, side_file):
    unit, loops = three_loops
    art = generate_artifact([loops[0]], unit)
    with pytest.raises(TimeTokenError):
        run_external(art, mock_config(side_file, run_extra="--no-token"), tmp_path / "w")
    with pytest.raises(MeasurementTimeout):
        run_external(art, mock_config(side_file, run_extra="--sleep 5", timeout_s=0.5), tmp_path / "w2")


def test_expected_output_mismatch_is_invalid(tmp_path, three_loops, side_file):
    unit, loops = three_loops
    expected = tmp_path / "expected.txt"
    expected.write_text("checksum 42\n")
    cfg = mock_config(side_file, run_extra="--wrong-on 3", expected_output=str(expected))
    assert run_external(generate_artifact([loops[0]], unit), cfg, tmp_path / "w").output_valid
    assert not run_external(generate_artifact([loops[2]], unit), cfg, tmp_path / "w").output_valid


def test_external_baseline_needs_command(tmp_path, side_file):
    cfg = ExternalBackendConfig(f"{PY} {MOCK} compile {{kernel}} {{host}}", f"{PY} {MOCK} run {{workdir}} {side_file}")
    with pytest.raises(InvalidConfig):
        ExternalBackend(cfg, tmp_path).baseline()


def test_run_error_on_nonzero_run(tmp_path, three_loops, side_file):
    unit, loops = three_loops
    cfg = ExternalBackendConfig(f"{PY} -c pass {{kernel}} {{host}}", f"{PY} {MOCK} run {{workdir}} {side_file}")
    with pytest.raises(RunError):
        run_external(generate_artifact([loops[0]], unit), cfg, tmp_path / "w")


def _candidates(ids):
    return [EfficiencyScore(i, 1.0, 0.1, 10.0 - k, rank=k + 1) for k, i in enumerate(ids)]


def test_search_interchangeable_between_backends(tmp_path, three_loops, side_file):
    unit, loops = three_loops
    planner = ArtifactPlanner(loops, unit, 1, load_cost_model(), 1.0)
    config = SearchConfig(4, "total", 1.0, jobs=2)
    sim = run_search(config, _candidates([1, 2, 3]), SimBackend(load_sidecar(side_file)), planner)
    ext = run_search(config, _candidates([1, 2, 3]), ExternalBackend(mock_config(side_file), tmp_path), planner)
    assert sim.trace == ext.trace
    assert (sim.best_pattern, sim.best_loop_ids, sim.speedup, sim.budget_used) == \
           (ext.best_pattern, ext.best_loop_ids, ext.speedup, ext.budget_used)
    assert sim.best_loop_ids == (1, 3)


def test_failed_compile_keeps_search_going(tmp_path, three_loops, side_file):
    unit, loops = three_loops
    planner = ArtifactPlanner(loops, unit, 1, load_cost_model(), 1.0)
    backend = ExternalBackend(mock_config(side_file, compile_extra="--fail-on 1"), tmp_path)
    out = run_search(SearchConfig(4), _candidates([1, 2, 3]), backend, planner)
    status = {t.loop_ids: t.status for t in out.trace}
    assert status[(1,)] == "failed"
    assert out.budget_used == 4
    assert out.best_loop_ids == (2, 3)


def test_sim_verify_flags_broken_kernel():
    unit = parse_source(fixture_sources("tdfir"))
    loops = apply_annotations(discover_loops(unit), unit)
    planner = ArtifactPlanner(loops, unit, 1, load_cost_model(), 1.0)
    art, est, members = planner.plan((1,))
    from dataclasses import replace
    from loopoffload.explorer import OffloadPattern

    side = load_sidecar(fixture_sidecar("tdfir"))
    good = OffloadPattern(1, (1,), 1, est, art, loops=members)
    broken_art = replace(art, kernel_text=art.kernel_text.replace("+=", "-=", 1))
    broken = OffloadPattern(2, (1,), 1, est, broken_art, loops=members)
    backend = SimBackend(side, verify_unit=unit, verify_seed=1)
    assert backend.measure(good).output_valid
    assert not backend.measure(broken).output_valid
