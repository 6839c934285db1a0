from .artifact import (
    STAGE_MARKERS,
    InterfaceVar,
    KernelArtifact,
    StaticOps,
    generate_artifact,
    interface_manifest,
    kernel_name,
    markers_in_order,
    pattern_name,
    write_artifact,
)
from .unroll import UnrollPlan, apply_unroll, unroll_plan

__all__ = [
    "STAGE_MARKERS",
    "InterfaceVar",
    "KernelArtifact",
    "StaticOps",
    "UnrollPlan",
    "apply_unroll",
    "generate_artifact",
    "interface_manifest",
    "kernel_name",
    "markers_in_order",
    "pattern_name",
    "unroll_plan",
    "write_artifact",
]
