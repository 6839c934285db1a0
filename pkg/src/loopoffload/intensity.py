"""Arithmetic-intensity scoring and the top-a cut.

The score is ``ops_total * footprint_bytes / max(1, access_count)``: it grows
with trip count and data size and shrinks as the number of distinct array
references grows. Only the resulting order is consumed downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import InvalidConfig
from .frontend.loops import DEFAULT_TRIP, LoopInfo, enclosing_trips

DEFAULT_OP_WEIGHTS = (1.0, 1.0, 1.0, 1.0)  # add, mul, div, other


@dataclass(frozen=True)
class IntensityScore:
    loop_id: int
    ops_total: float
    access_count: int
    footprint_bytes: int
    intensity: float
    rank: int = 0


def weighted_ops(profile, op_weights=DEFAULT_OP_WEIGHTS) -> float:
    wa, wm, wd, wo = op_weights
    return wa * profile.ops_add + wm * profile.ops_mul + wd * profile.ops_div + wo * profile.ops_other


def footprint_bytes(profile, trip: int) -> int:
    """Array bytes plus scalar bytes; arrays of unknown extent count one element per iteration."""
    total = profile.scalars_bytes
    for a in profile.arrays:
        extent = a.extent_elements if a.extent_elements is not None else trip
        total += extent * a.element_bytes
    return total


def compute_intensity(
    loop: LoopInfo,
    enclosing_trips: Sequence[int] = (),
    default_trip: int = DEFAULT_TRIP,
    op_weights=DEFAULT_OP_WEIGHTS,
) -> IntensityScore:
    """Score one loop.

    ``enclosing_trips`` are the resolved trips of the loops around this one;
    the body executes ``own_trip * prod(enclosing_trips)`` times in total.
    """
    trip = loop.trip.resolved(default_trip)
    profile = loop.body_profile
    ops_total = weighted_ops(profile, op_weights) * trip * math.prod(enclosing_trips)
    fp = footprint_bytes(profile, trip)
    access = profile.access_exprs
    value = ops_total * fp / max(1, access)
    if not math.isfinite(value):
        value = math.inf if value > 0 else 0.0
    return IntensityScore(loop.id, ops_total, access, fp, float(value))


def score_loops(loops, default_trip=DEFAULT_TRIP, op_weights=DEFAULT_OP_WEIGHTS) -> list:
    """Intensity for every loop, ranked 1..n."""
    scores = [
        compute_intensity(lp, enclosing_trips(lp, loops, default_trip), default_trip, op_weights)
        for lp in loops
    ]
    return rank_scores(scores)


def _order(scores):
    return sorted(scores, key=lambda s: (-s.intensity, s.loop_id))


def rank_scores(scores) -> list:
    return [replace(s, rank=k) for k, s in enumerate(_order(scores), start=1)]


def rank_top_a(scores, a: int) -> list:
    """The ``min(a, n)`` most intense loops; ties go to the earlier loop."""
    if a < 1:
        raise InvalidConfig(f"top-a must be >= 1, got {a}")
    return rank_scores(scores)[:a]
