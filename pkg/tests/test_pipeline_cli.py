import json
import os

import pytest

from loopoffload.cli import EXIT_CONFIG, EXIT_OK, EXIT_PIPELINE, main
from loopoffload.errors import InvalidConfig, ReportParseError
from loopoffload.fixtures import fixture_sidecar, fixture_sources
from loopoffload.frontend import export_inventory
from loopoffload.pipeline import PipelineConfig, build_report, parse_op_weights, run_pipeline
from loopoffload.report import SCHEMA, check_consistency, emit_report, json_schema, parse_report

from conftest import loops_of


def demo(name, **kw):
    return run_pipeline(PipelineConfig(sidecar=str(fixture_sidecar(name)), **kw), fixture_sources(name), name=name)


def test_default_config_on_tdfir():
    r = demo("tdfir")
    assert r.loop_count == 36
    assert len(r.top_a) == 5 and len(r.top_c) == 3
    assert r.outcome.budget_used <= 4
    assert r.outcome.speedup == pytest.approx(4.0, abs=1e-3)
    assert check_consistency(r) == []
    assert any("not a hardware measurement" in n for n in r.notes)


def test_default_config_on_mriq():
    r = demo("mriq")
    assert r.loop_count == 16
    assert r.outcome.speedup == pytest.approx(7.1, abs=1e-3)


def test_loop_free_source_stays_on_cpu(tmp_path):
    src = tmp_path / "plain.c"
    src.write_text("int add(int x, int y) { return x + y; }\n")
    side = tmp_path / "side.json"
    side.write_text(json.dumps({"cpu_time_ms": 12.5, "per_loop": {}}))
    r = run_pipeline(PipelineConfig(sidecar=str(side)), [src])
    assert r.top_c == [] and r.planned == []
    assert r.outcome.best_pattern is None and r.outcome.speedup == 1.0
    assert check_consistency(r) == []
    assert main(["run", str(src), "--sidecar", str(side), "--report", str(tmp_path / "r.json")]) == EXIT_OK


@pytest.mark.parametrize("kw", [dict(c=6, a=5), dict(d=0), dict(b=0), dict(resource_cap=0),
                                dict(budget_mode="all"), dict(op_weights=(1, 1, 1))])
def test_config_validation(kw):
    with pytest.raises(InvalidConfig):
        PipelineConfig(**kw)


def test_op_weights_parsing():
    assert parse_op_weights("1,2,3.5,0") == (1.0, 2.0, 3.5, 0.0)
    with pytest.raises(InvalidConfig):
        parse_op_weights("1,2")


def test_analyze_and_plan_stop_early():
    cfg = PipelineConfig()
    a = run_pipeline(cfg, fixture_sources("tdfir"), stop_after="analyze")
    assert a.top_a and a.efficiency == [] and a.outcome is None
    p = run_pipeline(cfg, fixture_sources("tdfir"), stop_after="plan")
    assert len(p.top_c) == 3 and [x.round for x in p.planned] == [1, 1, 1] and p.outcome is None


def test_plan_writes_artifacts_to_env_workdir(tmp_path, monkeypatch):
    monkeypatch.setenv("OFFLOAD_WORKDIR", str(tmp_path))
    run_pipeline(PipelineConfig(), fixture_sources("tdfir"), stop_after="plan")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["pattern_1", "pattern_29", "pattern_30"]


def test_inventory_input_matches_source_ranking(tmp_path):
    src = tmp_path / "inv.c"
    src.write_text("""
    float a[100], b[100];
    void f(int x){ int i;
      for (i = 0; i < 100; i++) a[i] = a[i] * b[i] + 1.0f;
      for (i = 0; i < 100; i++) b[i] = 0;
      // offload: trip=50
      while (x) { x--; }
    }""")
    cfg = PipelineConfig(a=3, c=2)
    from_src = run_pipeline(cfg, [src], stop_after="plan")
    _, loops = loops_of(src.read_text())
    from_inv = run_pipeline(cfg, inventory=export_inventory(loops), stop_after="plan")
    assert from_inv.loop_count == 3
    assert from_inv.top_a == from_src.top_a
    assert [s.intensity for s in from_inv.intensity] == [s.intensity for s in from_src.intensity]
    assert len(from_inv.top_c) == 2


def test_codegen_failures_are_excluded_not_fatal(tmp_path):
    src = tmp_path / "calls.c"
    src.write_text("""
    float a[64], b[64]; float g(float);
    void f(void){ int i;
      for (i = 0; i < 64; i++) a[i] = g(b[i]) * b[i] * b[i];
      for (i = 0; i < 64; i++) b[i] = b[i] + 1.0f;
    }""")
    r = run_pipeline(PipelineConfig(a=2, c=1), [src], stop_after="plan")
    assert [e.loop_id for e in r.excluded] == [1]
    assert r.top_c == [2]


def test_json_round_trip_fixpoint():
    report = build_report([demo("tdfir"), demo("mriq")])
    data = emit_report(report, "json")
    assert emit_report(parse_report(data), "json") == data
    assert json.loads(data)["schema"] == SCHEMA
    assert "properties" in json_schema() or "$defs" in json_schema()


def test_report_parser_rejects_garbage():
    with pytest.raises(ReportParseError):
        parse_report(b"{")
    with pytest.raises(ReportParseError):
        parse_report({"schema": SCHEMA, "runs": [{"name": 1}]})
    with pytest.raises(ReportParseError):
        parse_report({"schema": "other/9", "runs": []})


def test_table_has_speedup_rows():
    text = emit_report(build_report([demo("tdfir"), demo("mriq")]), "table").decode()
    assert "speedup vs all-CPU: 4.000x" in text
    assert "speedup vs all-CPU: 7.100x" in text
    summary = text[text.rindex("speedup vs all-CPU\n"):]
    assert "tdfir" in summary and "mriq" in summary


def test_consistency_check_catches_tampering():
    r = demo("tdfir")
    r.outcome.speedup = 3.0
    assert check_consistency(r)
    r = demo("tdfir")
    r.outcome.budget_used = 2
    assert check_consistency(r)


def test_no_absolute_paths_in_report():
    data = emit_report(build_report([demo("tdfir")]), "json").decode()
    assert os.path.abspath(os.sep) + "root" not in data
    assert "tdfir/tdfir.c" in data


# -- cli -----------------------------------------------------------------------


def test_cli_run_writes_report_and_figures(tmp_path, capsys):
    out = tmp_path / "demo.json"
    assert main(["run", "--fixture", "tdfir", "--fixture", "mriq", "--report", str(out)]) == EXIT_OK
    report = parse_report(out.read_bytes())
    assert [r.outcome.speedup for r in report.runs] == pytest.approx([4.0, 7.1], abs=1e-3)
    assert (tmp_path / "demo.speedup.png").stat().st_size > 0
    assert (tmp_path / "demo.trace.png").stat().st_size > 0


def test_cli_table_to_stdout(capsys):
    assert main(["run", "--fixture", "mriq", "--format", "table"]) == EXIT_OK
    assert "speedup vs all-CPU: 7.100x" in capsys.readouterr().out


def test_cli_analyze_json(capsys):
    assert main(["analyze", "--fixture", "tdfir", "--top-a", "4"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["runs"][0]["top_a"]) == 4


def test_cli_config_errors_exit_2(capsys):
    assert main(["run", "--fixture", "tdfir", "--top-c", "7"]) == EXIT_CONFIG
    assert main(["run", "--fixture", "nope"]) == EXIT_CONFIG
    assert main(["run"]) == EXIT_CONFIG
    assert main(["run", "--fixture", "tdfir", "--op-weights", "1,1"]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        main(["run", "--backend", "gpu"])
    assert exc.value.code == 2


def test_cli_pipeline_error_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"cpu_time_ms": -1, "per_loop": {}}')
    assert main(["run", "--fixture", "tdfir", "--sidecar", str(bad)]) == EXIT_PIPELINE


def test_cli_oracle(capsys):
    assert main(["oracle", "--instances", "10", "--format", "json"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["summary"]["instances"] == 10
    assert doc["constructed_gap"]["oracle_ms"] < doc["constructed_gap"]["staged_ms"]


def test_cli_external_backend(tmp_path):
    import shlex
    import sys
    from pathlib import Path

    mock = Path(__file__).with_name("mock_toolchain.py")
    side = fixture_sidecar("tdfir")
    py = shlex.quote(sys.executable)
    cfg = tmp_path / "backend.json"
    cfg.write_text(json.dumps({
        "compile_cmd": f"{py} {mock} compile {{kernel}} {{host}}",
        "run_cmd": f"{py} {mock} run {{workdir}} {side}",
        "baseline_cmd": f"{py} {mock} baseline {{workdir}} {side}",
    }))
    out = tmp_path / "ext.json"
    rc = main(["run", "--fixture", "tdfir", "--backend", "external", "--backend-config", str(cfg),
               "--workdir", str(tmp_path / "w"), "--jobs", "2", "--report", str(out)])
    assert rc == EXIT_OK
    run = parse_report(out.read_bytes()).runs[0]
    assert run.outcome.speedup == pytest.approx(4.0, abs=1e-3)
    assert (tmp_path / "w" / "pattern_1_29" / "pattern_1_29.kernel.cl").exists()
