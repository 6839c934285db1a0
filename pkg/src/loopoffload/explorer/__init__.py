"""Budgeted two-round pattern search and its exhaustive oracle."""

from ..backends.base import MeasurementResult
from .search import (
    BUDGET_MODES,
    OffloadPattern,
    SearchConfig,
    SearchOutcome,
    TraceEntry,
    brute_force_oracle,
    combination_order,
    enumerate_round1,
    enumerate_round2,
    round1_winners,
    run_search,
    select_best,
)
from .synthetic import (
    OracleRow,
    SyntheticInstance,
    SyntheticPlanner,
    gap_instance,
    make_instance,
    oracle_for,
    oracle_study,
    staged_run,
    summarize_study,
    union_trap_instance,
)

__all__ = [
    "BUDGET_MODES", "MeasurementResult", "OffloadPattern", "OracleRow", "SearchConfig",
    "SearchOutcome", "SyntheticInstance", "SyntheticPlanner", "TraceEntry",
    "brute_force_oracle", "combination_order", "enumerate_round1", "enumerate_round2",
    "gap_instance", "make_instance", "oracle_for", "oracle_study", "round1_winners",
    "run_search", "select_best", "staged_run", "summarize_study", "union_trap_instance",
]
