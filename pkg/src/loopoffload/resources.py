"""Pre-compile resource estimates, resource efficiency and the top-c cut.

A design's footprint is expressed as fractions of the device's LUT, FF, DSP
and BRAM. The analytic model is linear in static op counts and the unroll
factor; an external report (JSON with the same four fractions) can replace it
when a real HLS front-end is available.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from importlib import resources as importlib_resources
from pathlib import Path

from .errors import DomainError, EmptyCandidates, InvalidConfig, ModelError, ReportParseError

CATEGORIES = ("lut", "ff", "dsp", "bram")
OP_KINDS = ("add", "mul", "div", "other", "access")
DEFAULT_CAP = 1.0


@dataclass(frozen=True)
class CostModel:
    version: str
    base: dict  # category -> fraction
    per_op: dict  # op kind -> {category -> fraction per op}


@dataclass(frozen=True)
class ResourceEstimate:
    lut: float
    ff: float
    dsp: float
    bram: float
    aggregate: float
    fits: bool
    source: str = "model"  # model | external_report
    cap: float = DEFAULT_CAP

    def fractions(self) -> dict:
        return {c: getattr(self, c) for c in CATEGORIES}


@dataclass(frozen=True)
class EfficiencyScore:
    loop_id: int
    intensity: float
    resource_fraction: float
    efficiency: float
    rank: int = 0
    fits: bool = True


def make_estimate(fractions: dict, cap: float = DEFAULT_CAP, source: str = "model") -> ResourceEstimate:
    vals = {c: float(fractions[c]) for c in CATEGORIES}
    agg = max(vals.values())
    return ResourceEstimate(**vals, aggregate=agg, fits=agg <= cap, source=source, cap=cap)


def _fraction(value, where) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value) or value < 0:
        raise ModelError(f"{where}: fractions must be finite and >= 0, got {value!r}")
    return float(value)


def parse_cost_model(data) -> CostModel:
    if not isinstance(data, dict):
        raise ModelError("cost model must be a JSON object")
    base = data.get("base")
    per_op = data.get("per_op")
    if not isinstance(base, dict) or not isinstance(per_op, dict):
        raise ModelError("cost model needs 'base' and 'per_op' objects")
    b = {c: _fraction(base.get(c, 0.0), f"base.{c}") for c in CATEGORIES}
    p = {}
    for kind in OP_KINDS:
        row = per_op.get(kind, {})
        if not isinstance(row, dict):
            raise ModelError(f"per_op.{kind} must be an object")
        p[kind] = {c: _fraction(row.get(c, 0.0), f"per_op.{kind}.{c}") for c in CATEGORIES}
    unknown = set(per_op) - set(OP_KINDS)
    if unknown:
        raise ModelError(f"unknown op kinds in cost model: {sorted(unknown)}")
    return CostModel(str(data.get("version", "unversioned")), b, p)


def load_cost_model(path=None) -> CostModel:
    """Read a cost-model file; ``None`` loads the bundled default."""
    try:
        if path is None:
            text = importlib_resources.files("loopoffload").joinpath("data/default_cost_model.json").read_text()
        else:
            text = Path(path).read_text()
    except OSError as exc:
        raise ModelError(f"cannot read cost model {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"cost model is not valid JSON: {exc}") from exc
    return parse_cost_model(data)


def model_fractions(static_ops, b: int, model: CostModel) -> dict:
    """base + sum(coef * count * b) per category."""
    out = {}
    for c in CATEGORIES:
        total = model.base[c]
        for kind in OP_KINDS:
            total += model.per_op[kind][c] * getattr(static_ops, kind) * b
        out[c] = total
    return out


def estimate_resources(artifact, model: CostModel, cap: float = DEFAULT_CAP) -> ResourceEstimate:
    return make_estimate(model_fractions(artifact.static_ops, artifact.unroll, model), cap)


def parse_external_report(text, cap: float = DEFAULT_CAP) -> ResourceEstimate:
    """Read a ``{lut, ff, dsp, bram}`` fraction report from an HLS wrapper."""
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise ReportParseError(f"resource report is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ReportParseError("resource report must be a JSON object")
    missing = [c for c in CATEGORIES if c not in data]
    if missing:
        raise ReportParseError(f"resource report lacks {', '.join(missing)}")
    try:
        vals = {c: _fraction(data[c], c) for c in CATEGORIES}
    except ModelError as exc:
        raise ReportParseError(str(exc)) from exc
    return make_estimate(vals, cap, source="external_report")


def resource_efficiency(intensity: float, resource_fraction: float) -> float:
    if not resource_fraction > 0:
        raise DomainError(f"resource fraction must be > 0, got {resource_fraction}")
    return intensity / resource_fraction


def efficiency_scores(intensities, estimates: dict) -> list:
    """One EfficiencyScore per IntensityScore; ``estimates`` maps loop id -> ResourceEstimate."""
    out = []
    for s in intensities:
        est = estimates[s.loop_id]
        out.append(EfficiencyScore(
            s.loop_id, s.intensity, est.aggregate,
            resource_efficiency(s.intensity, est.aggregate), fits=est.fits,
        ))
    return rank_efficiency(out)


def rank_efficiency(scores) -> list:
    ordered = sorted(scores, key=lambda s: (-s.efficiency, s.loop_id))
    return [replace(s, rank=k) for k, s in enumerate(ordered, start=1)]


def select_top_c(scores, c: int) -> list:
    """The ``c`` most efficient loops among those that fit on their own."""
    if c < 1:
        raise InvalidConfig(f"top-c must be >= 1, got {c}")
    fitting = [s for s in scores if s.fits]
    if not fitting:
        raise EmptyCandidates("no candidate loop fits the device on its own")
    return rank_efficiency(fitting)[:c]
