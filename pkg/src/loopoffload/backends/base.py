"""What every measurement backend returns, and the interface the search relies on."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

BASELINE_ID = 0


@dataclass(frozen=True)
class MeasurementResult:
    pattern_id: int  # 0 is the all-CPU baseline
    wall_time: float  # milliseconds
    output_valid: bool
    backend: str  # sim | external

    def __post_init__(self):
        if not self.wall_time > 0:
            raise ValueError(f"wall time must be > 0 ms, got {self.wall_time}")


class Backend(Protocol):
    name: str
    parallel_safe: bool

    def baseline(self) -> MeasurementResult: ...

    def measure(self, pattern) -> MeasurementResult:
        """Time ``pattern`` (needs ``.id``, ``.loop_ids`` and ``.artifact``)."""
        ...
