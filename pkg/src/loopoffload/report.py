"""Report model, JSON/table rendering and the JSON schema parser.

JSON output is schema-versioned, carries no timestamps and is written with
sorted keys, so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from pydantic import TypeAdapter, ValidationError

from .errors import ReportParseError

SCHEMA = "loopoffload.report/1"
FORMATS = ("json", "table")


@dataclass
class ArrayRecord:
    name: str
    element_bytes: int
    extent_elements: Optional[int] = None


@dataclass
class LoopRecord:
    id: int
    kind: str
    file: str
    line: int
    function: str
    parent_id: Optional[int]
    depth: int
    trip_source: str
    trip_value: Optional[int]
    trip_used: int
    ops_add: int
    ops_mul: int
    ops_div: int
    ops_other: int
    access_exprs: int
    scalars_bytes: int
    arrays: list[ArrayRecord] = field(default_factory=list)


@dataclass
class IntensityRecord:
    loop_id: int
    ops_total: float
    access_count: int
    footprint_bytes: int
    intensity: float
    rank: int


@dataclass
class ResourceRecord:
    lut: float
    ff: float
    dsp: float
    bram: float
    aggregate: float
    fits: bool
    source: str


@dataclass
class EfficiencyRecord:
    loop_id: int
    intensity: float
    resource_fraction: float
    efficiency: float
    rank: int
    fits: bool
    resources: ResourceRecord


@dataclass
class ExcludedRecord:
    loop_id: int
    reason: str


@dataclass
class PatternRecord:
    pattern_id: int
    loop_ids: list[int]
    round: int
    predicted: ResourceRecord
    status: str
    wall_time_ms: Optional[float] = None
    output_valid: Optional[bool] = None
    error: Optional[str] = None


@dataclass
class MeasurementRecord:
    pattern_id: int
    wall_time_ms: float
    output_valid: bool
    backend: str


@dataclass
class OutcomeRecord:
    baseline_ms: float
    best_pattern: Optional[int]
    best_loop_ids: list[int]
    best_ms: float
    speedup: float
    budget: int
    budget_mode: str
    budget_limit: int
    budget_used: int
    measurements: list[MeasurementRecord]
    trace: list[PatternRecord]


@dataclass
class ConfigRecord:
    a: int
    b: int
    c: int
    d: int
    budget_mode: str
    resource_cap: float
    default_trip: int
    op_weights: list[float]
    backend: str
    seed: int
    repeats: int
    cost_model_version: str


@dataclass
class RunReport:
    name: str
    stage: str  # analyze | plan | run
    sources: list[str]
    config: ConfigRecord
    methodology: dict[str, str]
    loop_count: int
    loops: list[LoopRecord]
    intensity: list[IntensityRecord]
    top_a: list[int]
    excluded: list[ExcludedRecord]
    efficiency: list[EfficiencyRecord]
    top_c: list[int]
    planned: list[PatternRecord]
    outcome: Optional[OutcomeRecord]
    notes: list[str]
    diagnostics: list[str]


@dataclass
class Report:
    schema: str
    runs: list[RunReport]


_ADAPTER = TypeAdapter(Report)


def to_jsonable(report: Report) -> dict:
    return _ADAPTER.dump_python(report, mode="json")


def emit_json(report: Report) -> bytes:
    return (json.dumps(to_jsonable(report), indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


def parse_report(data) -> Report:
    """Validate JSON text (or an already-decoded object) against the report schema."""
    try:
        obj = json.loads(data) if isinstance(data, (str, bytes, bytearray)) else data
    except json.JSONDecodeError as exc:
        raise ReportParseError(f"report is not valid JSON: {exc}") from exc
    try:
        report = _ADAPTER.validate_python(obj, strict=False)
    except ValidationError as exc:
        raise ReportParseError(f"report does not match the schema: {exc}") from exc
    if report.schema != SCHEMA:
        raise ReportParseError(f"unsupported report schema {report.schema!r}; expected {SCHEMA!r}")
    return report


def json_schema() -> dict:
    return _ADAPTER.json_schema()


# -- table -------------------------------------------------------------------


def _ids(ids) -> str:
    return "{" + ",".join(str(i) for i in ids) + "}" if ids else "-"


def _fmt(v, spec=".3f") -> str:
    return "-" if v is None else format(v, spec)


def _grid(headers, rows) -> list:
    widths = [max(len(str(h)), *(len(str(r[k])) for r in rows)) if rows else len(str(h)) for k, h in enumerate(headers)]
    line = "  ".join(str(h).ljust(w) for h, w in zip(headers, widths))
    out = [line, "  ".join("-" * w for w in widths)]
    for r in rows:
        out.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))
    return out


def _speedup_line(run: RunReport) -> str:
    o = run.outcome
    if o is None:
        return "speedup vs all-CPU: not measured"
    if o.best_pattern is None:
        return f"speedup vs all-CPU: {o.speedup:.3f}x (all-CPU kept; no offload pattern beat {o.baseline_ms:.3f} ms)"
    return (f"speedup vs all-CPU: {o.speedup:.3f}x "
            f"(pattern {o.best_pattern}, loops {_ids(o.best_loop_ids)}, {o.best_ms:.3f} ms vs {o.baseline_ms:.3f} ms)")


def render_run(run: RunReport) -> list:
    cfg = run.config
    out = [
        f"== {run.name} ({run.stage}) ==",
        f"loops discovered: {run.loop_count}   a={cfg.a} b={cfg.b} c={cfg.c} d={cfg.d} "
        f"cap={cfg.resource_cap:g} budget-mode={cfg.budget_mode} default-trip={cfg.default_trip}",
    ]
    if run.intensity:
        top = {i: k for k, i in enumerate(run.top_a)}
        rows = [
            (s.rank, s.loop_id, _loc(run, s.loop_id), f"{s.intensity:.4g}", "yes" if s.loop_id in top else "")
            for s in run.intensity[: max(len(run.top_a), 10)]
        ]
        out.append("")
        out.append("arithmetic intensity")
        out.extend(_grid(("rank", "loop", "location", "intensity", "top-a"), rows))
    if run.excluded:
        out.append("")
        out.extend(f"excluded loop {e.loop_id}: {e.reason}" for e in run.excluded)
    if run.efficiency:
        rows = [
            (e.rank, e.loop_id, f"{e.intensity:.4g}", f"{e.resource_fraction:.4f}", f"{e.efficiency:.4g}",
             "yes" if e.fits else "no", "yes" if e.loop_id in run.top_c else "")
            for e in run.efficiency
        ]
        out.append("")
        out.append("resource efficiency")
        out.extend(_grid(("rank", "loop", "intensity", "resource", "efficiency", "fits", "top-c"), rows))
    if run.planned and run.outcome is None:
        rows = [(p.pattern_id, p.round, _ids(p.loop_ids), f"{p.predicted.aggregate:.4f}", p.status) for p in run.planned]
        out.append("")
        out.append("round-1 patterns")
        out.extend(_grid(("pattern", "round", "loops", "resource", "status"), rows))
    o = run.outcome
    if o is not None:
        rows = [(0, "-", "all-CPU", "-", "baseline", f"{o.baseline_ms:.3f}", "yes")]
        for p in o.trace:
            valid = "-" if p.output_valid is None else ("yes" if p.output_valid else "no")
            rows.append((p.pattern_id, p.round, _ids(p.loop_ids), f"{p.predicted.aggregate:.4f}",
                         p.status, _fmt(p.wall_time_ms), valid))
        out.append("")
        out.append(f"measurements (budget {o.budget_used}/{o.budget_limit}, mode {o.budget_mode})")
        out.extend(_grid(("pattern", "round", "loops", "resource", "status", "time_ms", "valid"), rows))
        for p in o.trace:
            if p.error:
                out.append(f"pattern {p.pattern_id} failed: {p.error}")
    out.append("")
    out.append(_speedup_line(run))
    out.extend(f"note: {n}" for n in run.notes)
    return out


def _loc(run: RunReport, loop_id: int) -> str:
    for lp in run.loops:
        if lp.id == loop_id:
            return f"{lp.file}:{lp.line} {lp.function}"
    return "?"


def render_table(report: Report) -> str:
    lines = []
    for run in report.runs:
        lines.extend(render_run(run))
        lines.append("")
    measured = [r for r in report.runs if r.outcome is not None]
    if measured:
        lines.append("speedup vs all-CPU")
        lines.extend(_grid(("program", "speedup"), [(r.name, f"{r.outcome.speedup:.3f}") for r in measured]))
        lines.append("")
    return "\n".join(lines)


def emit_report(report: Report, fmt: str = "json") -> bytes:
    if fmt == "json":
        return emit_json(report)
    if fmt == "table":
        return render_table(report).encode()
    raise ValueError(f"unknown report format {fmt!r}; choose from {FORMATS}")


# -- consistency -------------------------------------------------------------


def check_consistency(run: RunReport, tol: float = 1e-9) -> list:
    """Problems found when recomputing the summary from the trace; empty when consistent."""
    o = run.outcome
    if o is None:
        return []
    problems = []
    measured = [p for p in o.trace if p.status in ("measured", "failed")]
    if len(measured) != o.budget_used:
        problems.append(f"budget_used {o.budget_used} but trace has {len(measured)} compile attempts")
    if o.budget_used > o.budget_limit:
        problems.append("budget exceeded")
    valid = [p for p in o.trace if p.status == "measured" and p.output_valid]
    best = min(valid, key=lambda p: (p.wall_time_ms, p.pattern_id), default=None)
    if best is not None and best.wall_time_ms < o.baseline_ms:
        if o.best_pattern != best.pattern_id:
            problems.append(f"best pattern {o.best_pattern} but trace argmin is {best.pattern_id}")
        if abs(o.speedup - o.baseline_ms / best.wall_time_ms) > tol * max(1.0, o.speedup):
            problems.append("speedup does not match baseline / best time")
    else:
        if o.best_pattern is not None or abs(o.speedup - 1.0) > tol:
            problems.append("no valid pattern beats baseline, yet a best pattern is reported")
    for p in o.trace:
        if p.status == "measured" and p.predicted.aggregate > run.config.resource_cap:
            problems.append(f"pattern {p.pattern_id} measured above the resource cap")
    return problems
