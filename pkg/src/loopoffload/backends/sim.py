"""Deterministic timing simulator driven by a ground-truth sidecar file.

Time for an offloaded loop set ``S``::

    cpu_time_ms * prod(1 - gain_i) + sum(overhead_i) + sum(interference_ij)

unless the sidecar lists an explicit time for ``S``. Interference may be
negative, which is how a sidecar makes a combination better (or worse) than its
singletons suggest.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

from ..errors import RunError, SidecarError
from .base import BASELINE_ID, MeasurementResult


@dataclass(frozen=True)
class LoopTiming:
    gain: float
    overhead_ms: float = 0.0


@dataclass(frozen=True)
class SimSidecar:
    cpu_time_ms: float
    per_loop: dict  # loop id -> LoopTiming
    interference: dict = field(default_factory=dict)  # frozenset pair -> ms
    explicit: dict = field(default_factory=dict)  # frozenset -> ms
    invalid: frozenset = frozenset()  # frozensets whose output is wrong
    label: str = ""
    note: str = ""

    def __post_init__(self):
        if not (isinstance(self.cpu_time_ms, (int, float)) and self.cpu_time_ms > 0 and math.isfinite(self.cpu_time_ms)):
            raise SidecarError(f"cpu_time_ms must be a positive number, got {self.cpu_time_ms!r}")
        for lid, t in self.per_loop.items():
            if not 0 <= t.gain < 1:
                raise SidecarError(f"loop {lid}: gain must lie in [0, 1), got {t.gain}")
            if t.overhead_ms < 0:
                raise SidecarError(f"loop {lid}: overhead_ms must be >= 0, got {t.overhead_ms}")
        for pair in self.interference:
            if len(pair) != 2:
                raise SidecarError(f"interference key {sorted(pair)} must name exactly two loops")
        for s, ms in self.explicit.items():
            if not ms > 0:
                raise SidecarError(f"explicit time for {sorted(s)} must be > 0, got {ms}")


def _key(text) -> frozenset:
    try:
        ids = frozenset(int(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise SidecarError(f"bad loop-set key {text!r}") from exc
    return ids


def _number(v, where) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SidecarError(f"{where}: expected a number, got {v!r}")
    return float(v)


def parse_sidecar(data) -> SimSidecar:
    if not isinstance(data, dict):
        raise SidecarError("sidecar must be a JSON object")
    if "cpu_time_ms" not in data:
        raise SidecarError("sidecar lacks cpu_time_ms")
    per_loop = {}
    for k, v in (data.get("per_loop") or {}).items():
        if not isinstance(v, dict):
            raise SidecarError(f"per_loop[{k}] must be an object")
        try:
            lid = int(k)
        except ValueError as exc:
            raise SidecarError(f"per_loop key {k!r} is not a loop id") from exc
        per_loop[lid] = LoopTiming(
            _number(v.get("gain", 0.0), f"per_loop[{k}].gain"),
            _number(v.get("overhead_ms", 0.0), f"per_loop[{k}].overhead_ms"),
        )
    interference = {_key(k): _number(v, f"interference[{k}]") for k, v in (data.get("interference") or {}).items()}
    explicit = {_key(k): _number(v, f"explicit[{k}]") for k, v in (data.get("explicit") or {}).items()}
    invalid = frozenset(_key(k) for k in (data.get("invalid") or []))
    return SimSidecar(
        _number(data["cpu_time_ms"], "cpu_time_ms"), per_loop, interference, explicit, invalid,
        str(data.get("label", "")), str(data.get("note", "")),
    )


def load_sidecar(path) -> SimSidecar:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise SidecarError(f"cannot read sidecar {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SidecarError(f"sidecar {path} is not valid JSON: {exc}") from exc
    return parse_sidecar(data)


def sidecar_to_dict(s: SimSidecar) -> dict:
    def k(ids):
        return ",".join(str(i) for i in sorted(ids))

    return {
        "cpu_time_ms": s.cpu_time_ms,
        "per_loop": {str(i): {"gain": t.gain, "overhead_ms": t.overhead_ms} for i, t in sorted(s.per_loop.items())},
        "interference": {k(p): v for p, v in sorted(s.interference.items(), key=lambda kv: sorted(kv[0]))},
        "explicit": {k(p): v for p, v in sorted(s.explicit.items(), key=lambda kv: sorted(kv[0]))},
        "invalid": sorted(k(p) for p in s.invalid),
        "label": s.label,
        "note": s.note,
    }


def set_time(loop_ids, sidecar: SimSidecar) -> float:
    """Closed-form time of one loop set, in ms."""
    ids = frozenset(loop_ids)
    unknown = sorted(i for i in ids if i not in sidecar.per_loop)
    if unknown:
        raise SidecarError(f"sidecar has no timing for loop(s) {unknown}")
    if ids in sidecar.explicit:
        return sidecar.explicit[ids]
    t = sidecar.cpu_time_ms
    for i in sorted(ids):
        t *= 1.0 - sidecar.per_loop[i].gain
    t += sum(sidecar.per_loop[i].overhead_ms for i in sorted(ids))
    for pair in combinations(sorted(ids), 2):
        t += sidecar.interference.get(frozenset(pair), 0.0)
    if not t > 0:
        raise SidecarError(f"sidecar yields a non-positive time ({t} ms) for {sorted(ids)}")
    return t


def simulate_time(pattern, sidecar: SimSidecar, pattern_id=None) -> MeasurementResult:
    """Measurement for ``pattern`` (an OffloadPattern or an iterable of loop ids)."""
    ids = frozenset(getattr(pattern, "loop_ids", pattern))
    if pattern_id is None:
        pattern_id = getattr(pattern, "id", BASELINE_ID if not ids else -1)
    valid = ids not in sidecar.invalid
    return MeasurementResult(pattern_id, set_time(ids, sidecar), valid, "sim")


class SimBackend:
    """Backend over a sidecar; optionally cross-checks kernels with the evaluator."""

    name = "sim"
    parallel_safe = True

    def __init__(self, sidecar: SimSidecar, verify_unit=None, verify_seed: int = 0):
        self.sidecar = sidecar
        self.verify_unit = verify_unit
        self.verify_seed = verify_seed

    def baseline(self) -> MeasurementResult:
        return simulate_time((), self.sidecar, BASELINE_ID)

    def measure(self, pattern) -> MeasurementResult:
        result = simulate_time(pattern, self.sidecar, pattern.id)
        if self.verify_unit is not None and result.output_valid and pattern.artifact is not None:
            from .evaluator import EvalError, check_equivalence

            loops = getattr(pattern, "loops", None)
            if loops and all(lp.node is not None for lp in loops):
                try:
                    same = check_equivalence(pattern.artifact, loops, self.verify_unit, self.verify_seed)
                except EvalError as exc:
                    raise RunError(f"functional check of pattern {pattern.id} failed: {exc}") from exc
                if not same:
                    result = MeasurementResult(result.pattern_id, result.wall_time, False, "sim")
        return result
