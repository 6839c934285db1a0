"""Bundled demo programs: C sources plus a timing sidecar each."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

EXPECTED_LOOPS = {"tdfir": 36, "mriq": 16}


def fixture_dir(name: str) -> Path:
    root = Path(str(resources.files(__name__)))
    path = root / name
    if not path.is_dir() or name.startswith(("_", ".")):
        raise FileNotFoundError(f"no bundled fixture named {name!r}; known: {', '.join(list_fixtures())}")
    return path


def list_fixtures() -> list:
    root = Path(str(resources.files(__name__)))
    return sorted(p.name for p in root.iterdir() if p.is_dir() and not p.name.startswith(("_", ".")))


def fixture_sources(name: str) -> list:
    """Headers first, then C files, each group sorted by name."""
    d = fixture_dir(name)
    return sorted(d.glob("*.h")) + sorted(d.glob("*.c"))


def fixture_sidecar(name: str) -> Path:
    return fixture_dir(name) / "sidecar.json"
