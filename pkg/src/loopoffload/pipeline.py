"""End-to-end orchestration: sources in, one typed run report out."""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .backends import ExternalBackend, SimBackend, load_backend_config, load_sidecar
from .codegen import generate_artifact, write_artifact
from .errors import CodegenError, EmptyCandidates, InvalidConfig
from .explorer import BUDGET_MODES, SearchConfig, enumerate_round1, run_search
from .frontend import DEFAULT_TRIP, apply_annotations, discover_loops, import_inventory, parse_source
from .intensity import DEFAULT_OP_WEIGHTS, rank_top_a, score_loops
from .report import (
    SCHEMA,
    ArrayRecord,
    ConfigRecord,
    EfficiencyRecord,
    ExcludedRecord,
    IntensityRecord,
    LoopRecord,
    MeasurementRecord,
    OutcomeRecord,
    PatternRecord,
    Report,
    ResourceRecord,
    RunReport,
)
from .resources import efficiency_scores, estimate_resources, load_cost_model, select_top_c

STAGES = ("analyze", "plan", "run")
BACKENDS = ("sim", "external")
WORKDIR_ENV = "OFFLOAD_WORKDIR"

METHODOLOGY = {
    "loop_kinds": "for, while and do-while statements inside function bodies, in document order",
    "loop_ids": "1-based, in document order across the sources as listed",
    "trip_counts": "static bounds first, then '// offload: trip=N' annotations, else the default trip",
    "intensity": "ops_total * footprint_bytes / max(1, access_count); ops_total multiplies by enclosing trips",
    "resource_fraction": "max of the LUT, FF, DSP and BRAM fractions",
    "efficiency": "intensity / resource_fraction",
    "budget": "total: d bounds both rounds together; round1: each round may use d",
    "round2_order": "winning singletons combined, pairs first, then by summed singleton speedup",
    "timing": "one run per pattern unless repeats > 1, in which case the minimum is kept",
}


@dataclass(frozen=True)
class PipelineConfig:
    a: int = 5
    b: int = 1
    c: int = 3
    d: int = 4
    budget_mode: str = "total"
    resource_cap: float = 1.0
    default_trip: int = DEFAULT_TRIP
    op_weights: tuple = DEFAULT_OP_WEIGHTS
    backend: str = "sim"
    sidecar: Optional[str] = None
    backend_config: Optional[str] = None
    cost_model: Optional[str] = None
    seed: int = 0
    report: Optional[str] = None
    jobs: int = 1
    repeats: int = 1
    workdir: Optional[str] = None
    verify: bool = False

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "default_trip", "jobs", "repeats"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise InvalidConfig(f"{name} must be an integer >= 1, got {v!r}")
        if self.c > self.a:
            raise InvalidConfig(f"top-c ({self.c}) may not exceed top-a ({self.a})")
        if not (isinstance(self.resource_cap, (int, float)) and self.resource_cap > 0
                and math.isfinite(self.resource_cap)):
            raise InvalidConfig(f"resource cap must be a finite number > 0, got {self.resource_cap!r}")
        if self.budget_mode not in BUDGET_MODES:
            raise InvalidConfig(f"budget mode must be one of {BUDGET_MODES}, got {self.budget_mode!r}")
        if self.backend not in BACKENDS:
            raise InvalidConfig(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        w = tuple(self.op_weights)
        if len(w) != 4 or any(not (isinstance(x, (int, float)) and x >= 0 and math.isfinite(x)) for x in w):
            raise InvalidConfig(f"op weights need four finite numbers >= 0, got {self.op_weights!r}")
        object.__setattr__(self, "op_weights", tuple(float(x) for x in w))


def parse_op_weights(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise InvalidConfig(f"--op-weights needs add,mul,div,other; got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise InvalidConfig(f"--op-weights: {exc}") from exc


class ArtifactPlanner:
    """Builds (and caches) the artifact and resource estimate for a loop set."""

    def __init__(self, loops, unit, b: int, model, cap: float, default_trip: int = DEFAULT_TRIP):
        self.by_id = {lp.id: lp for lp in loops}
        self.unit = unit
        self.b = b
        self.model = model
        self.cap = cap
        self.default_trip = default_trip
        self._cache: dict = {}

    def plan(self, loop_ids):
        key = tuple(sorted(loop_ids))
        if key not in self._cache:
            loops = [self.by_id[i] for i in key]
            try:
                artifact = generate_artifact(loops, self.unit, self.b, self.default_trip)
            except CodegenError as exc:
                self._cache[key] = exc
            else:
                self._cache[key] = (artifact, estimate_resources(artifact, self.model, self.cap), tuple(loops))
        hit = self._cache[key]
        if isinstance(hit, CodegenError):
            raise hit
        return hit

    def _ancestors(self, loop_id) -> set:
        out, p = set(), self.by_id[loop_id].parent_id
        while p is not None:
            out.add(p)
            p = self.by_id[p].parent_id
        return out

    def compatible(self, loop_ids) -> bool:
        """False for sets holding a loop and one nested inside it, or that fail codegen."""
        ids = set(loop_ids)
        if any(self._ancestors(i) & ids for i in ids):
            return False
        try:
            self.plan(tuple(ids))
        except CodegenError:
            return False
        return True


# -- display helpers ---------------------------------------------------------


def _display_map(paths) -> dict:
    """Source path -> short path relative to the sources' common parent's parent."""
    if not paths:
        return {}
    resolved = [Path(p).resolve() for p in paths]
    common = Path(os.path.commonpath([str(p.parent) for p in resolved]))
    root = common.parent if common.parent != common else common
    return {str(p): str(r.relative_to(root)) for p, r in zip(paths, resolved)}


def _shorten(text: str, names: dict) -> str:
    for full, short in sorted(names.items(), key=lambda kv: -len(kv[0])):
        text = text.replace(full, short)
    return text


def _resource_record(est) -> ResourceRecord:
    return ResourceRecord(est.lut, est.ff, est.dsp, est.bram, est.aggregate, est.fits, est.source)


def _loop_record(lp, names, default_trip) -> LoopRecord:
    bp = lp.body_profile
    file = names.get(lp.location[0], lp.location[0])
    return LoopRecord(
        id=lp.id, kind=lp.kind, file=file, line=lp.location[1],
        function=lp.function.name if lp.function is not None else "",
        parent_id=lp.parent_id, depth=lp.depth,
        trip_source=lp.trip.source, trip_value=lp.trip.value, trip_used=lp.trip.resolved(default_trip),
        ops_add=bp.ops_add, ops_mul=bp.ops_mul, ops_div=bp.ops_div, ops_other=bp.ops_other,
        access_exprs=bp.access_exprs, scalars_bytes=bp.scalars_bytes,
        arrays=[ArrayRecord(**asdict(a)) for a in bp.arrays],
    )


def _pattern_record(t) -> PatternRecord:
    return PatternRecord(
        pattern_id=t.pattern_id, loop_ids=list(t.loop_ids), round=t.round,
        predicted=ResourceRecord(**t.predicted, aggregate=t.predicted_aggregate,
                                 fits=t.status != "skipped_resource_cap", source="model"),
        status=t.status, wall_time_ms=t.wall_time, output_valid=t.output_valid, error=t.error,
    )


def _planned_record(p) -> PatternRecord:
    return PatternRecord(p.id, list(p.loop_ids), p.round, _resource_record(p.predicted_resource), p.status)


def _outcome_record(out, config) -> OutcomeRecord:
    return OutcomeRecord(
        baseline_ms=out.baseline_ms,
        best_pattern=out.best_pattern,
        best_loop_ids=list(out.best_loop_ids),
        best_ms=out.best_ms,
        speedup=out.speedup,
        budget=config.d,
        budget_mode=config.budget_mode,
        budget_limit=out.budget_limit,
        budget_used=out.budget_used,
        measurements=[MeasurementRecord(m.pattern_id, m.wall_time, m.output_valid, m.backend) for m in out.measurements],
        trace=[_pattern_record(t) for t in out.trace],
    )


def _fallback_outcome(baseline, config) -> OutcomeRecord:
    return OutcomeRecord(
        baseline_ms=baseline.wall_time, best_pattern=None, best_loop_ids=[], best_ms=baseline.wall_time,
        speedup=1.0, budget=config.d, budget_mode=config.budget_mode,
        budget_limit=SearchConfig(config.d, config.budget_mode, config.resource_cap).budget_limit,
        budget_used=0,
        measurements=[MeasurementRecord(baseline.pattern_id, baseline.wall_time, baseline.output_valid, baseline.backend)],
        trace=[],
    )


def resolve_workdir(config: PipelineConfig) -> tuple:
    """(path, explicit): the flag wins, then OFFLOAD_WORKDIR, else a fresh temp dir."""
    if config.workdir:
        return Path(config.workdir), True
    env = os.environ.get(WORKDIR_ENV)
    if env:
        return Path(env), True
    return Path(tempfile.mkdtemp(prefix="loopoffload-")), False


def _backend(config: PipelineConfig, unit, notes: list):
    if config.backend == "sim":
        if config.sidecar is None:
            raise InvalidConfig("the sim backend needs --sidecar")
        sidecar = load_sidecar(config.sidecar)
        if sidecar.label:
            notes.append(f"sidecar: {sidecar.label}")
        if sidecar.note:
            notes.append(sidecar.note)
        notes.append("times come from the sidecar timing model, not from hardware")
        return SimBackend(sidecar, unit if config.verify else None, config.seed)
    if config.backend_config is None:
        raise InvalidConfig("the external backend needs --backend-config")
    ext = load_backend_config(config.backend_config, config.repeats if config.repeats > 1 else None)
    workdir, _ = resolve_workdir(config)
    return ExternalBackend(ext, workdir)


def _config_record(config: PipelineConfig, model) -> ConfigRecord:
    return ConfigRecord(
        a=config.a, b=config.b, c=config.c, d=config.d, budget_mode=config.budget_mode,
        resource_cap=float(config.resource_cap), default_trip=config.default_trip,
        op_weights=list(config.op_weights), backend=config.backend, seed=config.seed,
        repeats=config.repeats, cost_model_version=model.version,
    )


@dataclass
class _Stage:
    loops: list
    unit: object
    names: dict
    diagnostics: list = field(default_factory=list)


def _load(sources, inventory) -> _Stage:
    if (sources is None) == (inventory is None):
        raise InvalidConfig("give either source files or a loop inventory")
    if inventory is not None:
        return _Stage(import_inventory(inventory), None, {})
    paths = [str(p) for p in sources]
    for p in paths:
        if not Path(p).is_file():
            raise InvalidConfig(f"source file not found: {p}")
    names = _display_map(paths)
    unit = parse_source(paths)
    return _Stage([], unit, names, [_shorten(d, names) for d in unit.diagnostics])


def run_pipeline(config: PipelineConfig, sources=None, inventory=None, stop_after: str = "run",
                 name: Optional[str] = None) -> RunReport:
    """Run frontend, intensity, codegen, resources and search up to ``stop_after``.

    ``sources`` are C file paths; ``inventory`` is loop-inventory JSON text.
    """
    if stop_after not in STAGES:
        raise InvalidConfig(f"stop_after must be one of {STAGES}, got {stop_after!r}")
    model = load_cost_model(config.cost_model)
    stage = _load(sources, inventory)
    if stage.unit is not None:
        loops = discover_loops(stage.unit, config.default_trip)
        loops = apply_annotations(loops, stage.unit, config.default_trip)
    else:
        loops = stage.loops
    if name is None:
        name = Path(sources[0]).parent.name if sources else "inventory"
    notes: list = []
    report = RunReport(
        name=name, stage=stop_after,
        sources=[stage.names[str(p)] for p in sources] if sources else [],
        config=_config_record(config, model), methodology=dict(METHODOLOGY),
        loop_count=len(loops),
        loops=[_loop_record(lp, stage.names, config.default_trip) for lp in loops],
        intensity=[], top_a=[], excluded=[], efficiency=[], top_c=[], planned=[],
        outcome=None, notes=notes, diagnostics=stage.diagnostics,
    )
    scores = score_loops(loops, config.default_trip, config.op_weights)
    report.intensity = [IntensityRecord(s.loop_id, s.ops_total, s.access_count, s.footprint_bytes, s.intensity, s.rank)
                        for s in scores]
    top_a = rank_top_a(scores, config.a) if scores else []
    report.top_a = [s.loop_id for s in top_a]
    if stop_after == "analyze":
        return report

    planner = ArtifactPlanner(loops, stage.unit, config.b, model, config.resource_cap, config.default_trip)
    kept, estimates = [], {}
    for s in top_a:
        try:
            _, est, _ = planner.plan((s.loop_id,))
        except CodegenError as exc:
            report.excluded.append(ExcludedRecord(s.loop_id, f"{type(exc).__name__}: {_shorten(str(exc), stage.names)}"))
            continue
        kept.append(s)
        estimates[s.loop_id] = est
    eff = efficiency_scores(kept, estimates)
    report.efficiency = [
        EfficiencyRecord(e.loop_id, e.intensity, e.resource_fraction, e.efficiency, e.rank, e.fits,
                         _resource_record(estimates[e.loop_id]))
        for e in eff
    ]
    try:
        top_c = select_top_c(eff, config.c)
    except EmptyCandidates:
        top_c = []
        notes.append("no candidate loop survived to the search; the program stays on the CPU")
    report.top_c = [e.loop_id for e in top_c]

    planned, skipped = [], []
    if top_c:
        planned = enumerate_round1(top_c, config.d, planner, config.resource_cap, 1, skipped)
        report.planned = [_planned_record(p) for p in sorted(planned + skipped, key=lambda p: p.id)]
    if stop_after == "plan":
        if config.workdir or os.environ.get(WORKDIR_ENV):
            workdir, _ = resolve_workdir(config)
            for p in planned:
                write_artifact(p.artifact, workdir)
        return report

    backend = _backend(config, stage.unit, notes)
    if not top_c:
        report.outcome = _fallback_outcome(backend.baseline(), config)
        return report
    search = SearchConfig(config.d, config.budget_mode, config.resource_cap, config.jobs)
    outcome = run_search(search, top_c, backend, planner)
    report.outcome = _outcome_record(outcome, config)
    failed = [t for t in outcome.trace if t.status == "failed"]
    if failed:
        notes.append(f"{len(failed)} pattern(s) failed to compile or run and still used budget")
    return report


def build_report(runs) -> Report:
    return Report(SCHEMA, list(runs))


__all__ = [
    "ArtifactPlanner", "METHODOLOGY", "PipelineConfig", "STAGES", "build_report",
    "parse_op_weights", "resolve_workdir", "run_pipeline",
]
