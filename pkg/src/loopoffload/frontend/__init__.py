"""C front-end: parsing, loop inventory and trip knowledge."""

from .loops import (
    DEFAULT_TRIP,
    ArrayRef,
    BodyProfile,
    LoopInfo,
    TripEstimate,
    apply_annotations,
    discover_loops,
    enclosing_trips,
    export_inventory,
    import_inventory,
)
from .nodes import SourceUnit
from .parser import parse_source, parse_text

__all__ = [
    "DEFAULT_TRIP", "ArrayRef", "BodyProfile", "LoopInfo", "TripEstimate",
    "SourceUnit", "apply_annotations", "discover_loops", "enclosing_trips",
    "export_inventory", "import_inventory", "parse_source", "parse_text",
]
