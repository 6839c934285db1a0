"""Two-round pattern search under a measurement budget, plus an exhaustive oracle.

Round 1 times each top candidate on its own. Round 2 combines the singletons
that beat the all-CPU baseline, smallest combinations first and, within a
size, best summed singleton speedup first. Combinations the resource model
says will not fit are skipped. Every compile attempt, failed or not, spends
one unit of budget.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Protocol

from ..backends.base import BASELINE_ID, MeasurementResult
from ..errors import BackendError, InvalidConfig

BUDGET_MODES = ("total", "round1")
STATUSES = ("planned", "skipped_resource_cap", "measured", "failed")
MAX_ORACLE_CANDIDATES = 20


@dataclass(frozen=True)
class OffloadPattern:
    id: int
    loop_ids: tuple
    round: int
    predicted_resource: object  # ResourceEstimate for the combined artifact
    artifact: object = field(default=None, compare=False, repr=False)
    status: str = "planned"
    loops: tuple = field(default=(), compare=False, repr=False)  # LoopInfo, when known


@dataclass(frozen=True)
class TraceEntry:
    pattern_id: int
    loop_ids: tuple
    round: int
    predicted: dict  # lut/ff/dsp/bram fractions
    predicted_aggregate: float
    status: str
    wall_time: Optional[float] = None
    output_valid: Optional[bool] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class SearchConfig:
    budget: int = 4
    budget_mode: str = "total"
    resource_cap: float = 1.0
    jobs: int = 1

    def __post_init__(self):
        if self.budget < 1:
            raise InvalidConfig(f"budget must be >= 1, got {self.budget}")
        if self.budget_mode not in BUDGET_MODES:
            raise InvalidConfig(f"budget mode must be one of {BUDGET_MODES}, got {self.budget_mode!r}")
        if not self.resource_cap > 0:
            raise InvalidConfig(f"resource cap must be > 0, got {self.resource_cap}")
        if self.jobs < 1:
            raise InvalidConfig(f"jobs must be >= 1, got {self.jobs}")

    @property
    def budget_limit(self) -> int:
        """Most non-baseline measurements a search may make."""
        return self.budget if self.budget_mode == "total" else 2 * self.budget


@dataclass(frozen=True)
class SearchOutcome:
    baseline_ms: float
    measurements: tuple  # MeasurementResult, baseline first
    best_pattern: Optional[int]
    best_loop_ids: tuple
    speedup: float
    budget_used: int
    budget_limit: int
    trace: tuple  # TraceEntry per pattern, in id order

    @property
    def best_ms(self) -> float:
        if self.best_pattern is None:
            return self.baseline_ms
        return next(m.wall_time for m in self.measurements if m.pattern_id == self.best_pattern)


class Planner(Protocol):
    def plan(self, loop_ids: tuple):
        """(artifact or None, ResourceEstimate, loops) for offloading ``loop_ids`` together."""
        ...


def _pattern(pid, ids, rnd, planner, cap) -> OffloadPattern:
    artifact, est, loops = planner.plan(tuple(sorted(ids)))
    status = "planned" if est.aggregate <= cap else "skipped_resource_cap"
    return OffloadPattern(pid, tuple(sorted(ids)), rnd, est, artifact, status, tuple(loops))


def enumerate_round1(candidates, d: int, planner, cap: float = 1.0, first_id: int = 1,
                     skipped: Optional[list] = None) -> list:
    """One singleton per candidate in efficiency order, at most ``d`` of them."""
    if not candidates:
        raise InvalidConfig("round 1 needs at least one candidate")
    if d < 1:
        raise InvalidConfig(f"budget must be >= 1, got {d}")
    out, pid = [], first_id
    for s in candidates:
        if len(out) == d:
            break
        p = _pattern(pid, (s.loop_id,), 1, planner, cap)
        pid += 1
        if p.status == "skipped_resource_cap":
            if skipped is not None:
                skipped.append(p)
            continue
        out.append(p)
    return out


def round1_winners(baseline: MeasurementResult, results: dict, patterns) -> dict:
    """Loop id -> singleton speedup, for valid singletons faster than baseline."""
    out = {}
    for p in patterns:
        r = results.get(p.id)
        if r is not None and r.output_valid and r.wall_time < baseline.wall_time:
            out[p.loop_ids[0]] = baseline.wall_time / r.wall_time
    return out


def combination_order(winners: dict) -> list:
    """Subsets of size >= 2: pairs before triples and so on, then largest
    summed singleton speedup first, then lexicographic loop ids."""
    ids = sorted(winners)
    subsets = [c for k in range(2, len(ids) + 1) for c in combinations(ids, k)]
    return sorted(subsets, key=lambda c: (len(c), -sum(winners[i] for i in c), c))


def enumerate_round2(winners: dict, remaining_budget: int, cap: float, planner, first_id: int,
                     skipped: Optional[list] = None) -> list:
    """Combination patterns to measure; over-cap subsets go to ``skipped``.

    Subsets the planner reports as incompatible (a loop together with a loop
    nested inside it) are passed over without a pattern id.
    """
    out, pid = [], first_id
    if remaining_budget <= 0 or len(winners) < 2:
        return out
    compatible = getattr(planner, "compatible", None)
    for subset in combination_order(winners):
        if len(out) == remaining_budget:
            break
        if compatible is not None and not compatible(subset):
            continue
        p = _pattern(pid, subset, 2, planner, cap)
        pid += 1
        if p.status == "skipped_resource_cap":
            if skipped is not None:
                skipped.append(p)
            continue
        out.append(p)
    return out


def _measure_all(patterns, backend, jobs) -> dict:
    """pattern id -> MeasurementResult or BackendError."""

    def one(p):
        try:
            return backend.measure(p)
        except BackendError as exc:
            return exc

    if jobs > 1 and getattr(backend, "parallel_safe", False) and len(patterns) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, patterns))
    else:
        results = [one(p) for p in patterns]
    return {p.id: r for p, r in zip(patterns, results)}


def _trace(p: OffloadPattern, outcome=None) -> TraceEntry:
    est = p.predicted_resource
    fr = {c: getattr(est, c) for c in ("lut", "ff", "dsp", "bram")}
    if isinstance(outcome, MeasurementResult):
        return TraceEntry(p.id, p.loop_ids, p.round, fr, est.aggregate, "measured",
                          outcome.wall_time, outcome.output_valid)
    if isinstance(outcome, BaseException):
        return TraceEntry(p.id, p.loop_ids, p.round, fr, est.aggregate, "failed",
                          error=f"{type(outcome).__name__}: {outcome}")
    return TraceEntry(p.id, p.loop_ids, p.round, fr, est.aggregate, p.status)


def select_best(baseline: MeasurementResult, measurements) -> Optional[MeasurementResult]:
    """Fastest valid offload measurement, if it beats the baseline."""
    valid = [m for m in measurements if m.pattern_id != BASELINE_ID and m.output_valid]
    if not valid:
        return None
    best = min(valid, key=lambda m: (m.wall_time, m.pattern_id))
    return best if best.wall_time < baseline.wall_time else None


def run_search(config: SearchConfig, candidates, backend, planner) -> SearchOutcome:
    """Baseline, then round 1, then round 2; never more than the budget allows."""
    baseline = backend.baseline()
    if baseline.pattern_id != BASELINE_ID:
        baseline = MeasurementResult(BASELINE_ID, baseline.wall_time, baseline.output_valid, baseline.backend)
    skipped: list = []
    r1 = enumerate_round1(candidates, config.budget, planner, config.resource_cap, 1, skipped)
    res1 = _measure_all(r1, backend, config.jobs)
    used = len(r1)
    ok1 = {pid: r for pid, r in res1.items() if isinstance(r, MeasurementResult)}
    winners = round1_winners(baseline, ok1, r1)
    remaining = config.budget - used if config.budget_mode == "total" else config.budget
    next_id = 1 + len(r1) + len(skipped)
    r2 = enumerate_round2(winners, remaining, config.resource_cap, planner, next_id, skipped)
    res2 = _measure_all(r2, backend, config.jobs)
    used += len(r2)
    assert used <= config.budget_limit, "measurement budget exceeded"

    outcomes = {**res1, **res2}
    measured = [outcomes[p.id] for p in r1 + r2 if isinstance(outcomes[p.id], MeasurementResult)]
    measured.sort(key=lambda m: m.pattern_id)
    best = select_best(baseline, measured)
    patterns = sorted(r1 + r2 + skipped, key=lambda p: p.id)
    trace = tuple(_trace(p, outcomes.get(p.id)) for p in patterns)
    by_id = {p.id: p for p in patterns}
    return SearchOutcome(
        baseline_ms=baseline.wall_time,
        measurements=tuple([baseline] + measured),
        best_pattern=best.pattern_id if best else None,
        best_loop_ids=by_id[best.pattern_id].loop_ids if best else (),
        speedup=baseline.wall_time / best.wall_time if best else 1.0,
        budget_used=used,
        budget_limit=config.budget_limit,
        trace=trace,
    )


def brute_force_oracle(candidate_ids, time_of, fits=None, valid=None) -> tuple:
    """Global optimum over the empty set and every fitting non-empty subset.

    ``time_of(frozenset) -> ms`` is the closed-form model; ``fits`` and
    ``valid`` filter subsets. Returns ``(frozenset, ms)``; the empty set is the
    all-CPU baseline.
    """
    ids = sorted(set(candidate_ids))
    if len(ids) > MAX_ORACLE_CANDIDATES:
        raise InvalidConfig(f"oracle is limited to {MAX_ORACLE_CANDIDATES} candidates, got {len(ids)}")
    best, best_t = frozenset(), time_of(frozenset())
    for k in range(1, len(ids) + 1):
        for c in combinations(ids, k):
            s = frozenset(c)
            if fits is not None and not fits(s):
                continue
            if valid is not None and not valid(s):
                continue
            t = time_of(s)
            if t < best_t:
                best, best_t = s, t
    return best, best_t
