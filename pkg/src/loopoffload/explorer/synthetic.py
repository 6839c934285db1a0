"""Seeded synthetic search instances and the staged-vs-oracle study.

An instance is a handful of loops with made-up intensities, per-loop resource
fractions and a timing sidecar. Combined resource use is the shared base plus
the sum of each member's own fractions, the same additive shape the analytic
cost model gives when kernels are merged.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass
from itertools import combinations

from ..backends.sim import LoopTiming, SimBackend, SimSidecar, set_time
from ..intensity import IntensityScore, rank_scores, rank_top_a
from ..resources import CATEGORIES, efficiency_scores, make_estimate, select_top_c
from .search import SearchConfig, brute_force_oracle, run_search


@dataclass(frozen=True)
class SyntheticInstance:
    seed: int
    intensities: tuple  # IntensityScore per loop, ranked
    loop_fractions: dict  # loop id -> {category: fraction}
    base: dict
    sidecar: SimSidecar
    cap: float = 1.0

    @property
    def loop_ids(self) -> list:
        return sorted(self.loop_fractions)

    def estimate(self, loop_ids):
        fr = {c: self.base[c] + sum(self.loop_fractions[i][c] for i in loop_ids) for c in CATEGORIES}
        return make_estimate(fr, self.cap)


class SyntheticPlanner:
    def __init__(self, instance: SyntheticInstance):
        self.instance = instance

    def plan(self, loop_ids):
        return None, self.instance.estimate(loop_ids), ()


def _positive_times(cpu, per_loop, interference, ids):
    """Halve negative interference until no subset runs in under half its interference-free time."""
    subsets = [s for k in range(len(ids) + 1) for s in combinations(ids, k)]
    for _ in range(40):
        if all(_formula(cpu, per_loop, interference, s) >= _formula(cpu, per_loop, {}, s) / 2 for s in subsets):
            return interference
        interference = {k: (v / 2 if v < 0 else v) for k, v in interference.items()}
    return {k: max(v, 0.0) for k, v in interference.items()}


def _formula(cpu, per_loop, interference, ids):
    t = cpu
    for i in ids:
        t *= 1 - per_loop[i].gain
    t += sum(per_loop[i].overhead_ms for i in ids)
    t += sum(interference.get(frozenset(p), 0.0) for p in combinations(ids, 2))
    return t


def make_instance(seed: int, n_loops=None, cap: float = 1.0, max_loops: int = 8) -> SyntheticInstance:
    rng = random.Random(seed)
    n = n_loops if n_loops is not None else rng.randint(5, max_loops)
    ids = list(range(1, n + 1))
    cpu = round(rng.uniform(100.0, 1000.0), 3)
    per_loop = {}
    for i in ids:
        gain = round(rng.uniform(0.0, 0.8), 4)
        overhead = round(rng.uniform(0.0, 0.4) * cpu, 3) if rng.random() < 0.4 else 0.0
        per_loop[i] = LoopTiming(gain, overhead)
    interference = {}
    for p in combinations(ids, 2):
        if rng.random() < 0.5:
            interference[frozenset(p)] = round(rng.uniform(-0.2, 0.3) * cpu, 3)
    interference = _positive_times(cpu, per_loop, interference, ids)
    invalid = set()
    if rng.random() < 0.1:
        invalid.add(frozenset([rng.choice(ids)]))
    if rng.random() < 0.1:
        invalid.add(frozenset(rng.sample(ids, 2)))
    sidecar = SimSidecar(cpu, per_loop, interference, {}, frozenset(invalid), f"synthetic seed {seed}")
    base = {c: round(rng.uniform(0.02, 0.05), 4) for c in CATEGORIES}
    fractions = {i: {c: round(rng.uniform(0.02, 0.6), 4) for c in CATEGORIES} for i in ids}
    scores = rank_scores([
        IntensityScore(i, 0.0, 1, 0, round(rng.uniform(1.0, 1000.0), 3)) for i in ids
    ])
    return SyntheticInstance(seed, tuple(scores), fractions, base, sidecar, cap)


@dataclass(frozen=True)
class StagedRun:
    instance: SyntheticInstance
    top_a: tuple
    efficiency: tuple
    top_c: tuple
    outcome: object  # SearchOutcome


def staged_run(instance: SyntheticInstance, a=5, c=3, d=4, budget_mode="total", jobs=1) -> StagedRun:
    """Intensity cut, efficiency cut and the two-round search on one instance."""
    top_a = rank_top_a(list(instance.intensities), a)
    estimates = {s.loop_id: instance.estimate([s.loop_id]) for s in top_a}
    eff = efficiency_scores(top_a, estimates)
    top_c = select_top_c(eff, c)
    config = SearchConfig(d, budget_mode, instance.cap, jobs)
    outcome = run_search(config, top_c, SimBackend(instance.sidecar), SyntheticPlanner(instance))
    return StagedRun(instance, tuple(top_a), tuple(eff), tuple(top_c), outcome)


def oracle_for(instance: SyntheticInstance, candidate_ids) -> tuple:
    side = instance.sidecar
    return brute_force_oracle(
        candidate_ids,
        lambda s: set_time(s, side),
        fits=lambda s: instance.estimate(sorted(s)).fits,
        valid=lambda s: s not in side.invalid,
    )


@dataclass(frozen=True)
class OracleRow:
    seed: int
    candidates: tuple
    staged_loops: tuple
    staged_ms: float
    oracle_loops: tuple
    oracle_ms: float

    @property
    def ratio(self) -> float:
        return self.staged_ms / self.oracle_ms


def oracle_study(seeds, a=5, c=3, d=4, budget_mode="total", max_loops: int = 8) -> list:
    rows = []
    for seed in seeds:
        inst = make_instance(seed, max_loops=max_loops)
        run = staged_run(inst, a, c, d, budget_mode)
        cands = [s.loop_id for s in run.top_c]
        best, best_ms = oracle_for(inst, cands)
        out = run.outcome
        rows.append(OracleRow(seed, tuple(cands), out.best_loop_ids, out.best_ms, tuple(sorted(best)), best_ms))
    return rows


def summarize_study(rows) -> dict:
    ratios = [r.ratio for r in rows]
    if not ratios:
        return {"instances": 0}
    q = statistics.quantiles(ratios, n=4) if len(ratios) > 1 else [ratios[0]] * 3
    return {
        "instances": len(rows),
        "optimal": sum(1 for r in ratios if r <= 1.0 + 1e-12),
        "min_ratio": min(ratios),
        "median_ratio": statistics.median(ratios),
        "q1_ratio": q[0],
        "q3_ratio": q[2],
        "max_ratio": max(ratios),
    }


def gap_instance() -> SyntheticInstance:
    """Three winning singletons where the best pair is not the one round 2 tries.

    Round 2 (budget 1) combines loops 1 and 2, which interfere badly; loops 1
    and 3 together are far faster than anything the staged search measures.
    """
    per_loop = {1: LoopTiming(0.5), 2: LoopTiming(0.45), 3: LoopTiming(0.4)}
    interference = {frozenset({1, 2}): 40.0, frozenset({1, 3}): -20.0}
    sidecar = SimSidecar(100.0, per_loop, interference, {}, frozenset(), "constructed: combination gap")
    scores = rank_scores([IntensityScore(i, 0.0, 1, 0, v) for i, v in ((1, 30.0), (2, 20.0), (3, 10.0))])
    fractions = {i: {c: 0.1 for c in CATEGORIES} for i in (1, 2, 3)}
    base = {c: 0.05 for c in CATEGORIES}
    return SyntheticInstance(-1, tuple(scores), fractions, base, sidecar, 1.0)


def union_trap_instance() -> SyntheticInstance:
    """Loops 1, 3 and 5 each beat the baseline, yet all three together lose to {1, 3}."""
    per_loop = {i: LoopTiming(g) for i, g in ((1, 0.5), (2, 0.0), (3, 0.4), (4, 0.0), (5, 0.3))}
    per_loop[2] = LoopTiming(0.0, 10.0)
    per_loop[4] = LoopTiming(0.0, 10.0)
    interference = {frozenset({1, 5}): 30.0, frozenset({3, 5}): 30.0}
    sidecar = SimSidecar(100.0, per_loop, interference, {}, frozenset(), "constructed: union is not best")
    scores = rank_scores([IntensityScore(i, 0.0, 1, 0, float(10 * (6 - i))) for i in range(1, 6)])
    fractions = {i: {c: 0.05 for c in CATEGORIES} for i in range(1, 6)}
    base = {c: 0.05 for c in CATEGORIES}
    return SyntheticInstance(-2, tuple(scores), fractions, base, sidecar, 1.0)
