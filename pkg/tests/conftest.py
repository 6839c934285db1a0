import random

import pytest
from hypothesis import settings

from loopoffload.frontend import apply_annotations, discover_loops, parse_text

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def loops_of(text, default_trip=1000):
    unit = parse_text(text, "t.c")
    loops = apply_annotations(discover_loops(unit, default_trip), unit, default_trip)
    return unit, loops


@pytest.fixture
def parse():
    return loops_of


_OPS = ["+", "-", "*", "/"]


def random_loop_program(seed: int) -> str:
    """One function with one counted loop over a few arrays and random arithmetic."""
    rng = random.Random(seed)
    n = rng.randint(1, 64)
    elem = rng.choice(["float", "double", "int"])
    arrays = [f"x{k}" for k in range(rng.randint(1, 4))]
    out = rng.choice(arrays)
    terms = []
    for _ in range(rng.randint(1, 5)):
        src = rng.choice(arrays)
        offset = rng.choice(["i", "i", f"({n} - 1 - i)"])
        terms.append(f"{src}[{offset}]")
    expr = terms[0]
    for t in terms[1:]:
        op = rng.choice(_OPS)
        expr = f"({expr} {op} ({t} * {t} + 1))" if op == "/" else f"({expr} {op} {t})"
    scale = rng.choice(["", " * s", " + s"])
    decls = "\n".join(f"{elem} {a}[{n}];" for a in arrays)
    return (
        f"{decls}\n"
        f"void kernel_{seed}({elem} s) {{\n"
        f"    int i;\n"
        f"    for (i = 0; i < {n}; i++) {{\n"
        f"        {out}[i] = {expr}{scale};\n"
        f"    }}\n"
        f"}}\n"
    )


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
