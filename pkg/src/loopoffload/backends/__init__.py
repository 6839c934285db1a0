"""Measurement backends: a sidecar-driven simulator and an external-command adapter."""

from .base import BASELINE_ID, Backend, MeasurementResult
from .external import (
    ExternalBackend,
    ExternalBackendConfig,
    load_backend_config,
    parse_time_token,
    render_command,
    run_external,
)
from .sim import LoopTiming, SimBackend, SimSidecar, load_sidecar, parse_sidecar, set_time, sidecar_to_dict, simulate_time

__all__ = [
    "BASELINE_ID", "Backend", "ExternalBackend", "ExternalBackendConfig", "LoopTiming",
    "MeasurementResult", "SimBackend", "SimSidecar", "load_backend_config", "load_sidecar",
    "parse_sidecar", "parse_time_token", "render_command", "run_external", "set_time",
    "sidecar_to_dict", "simulate_time",
]
