"""Command-line entry point: ``loopoffload analyze|plan|run|oracle``.

Exit status is 0 on success (the all-CPU fallback included), 1 when a
pipeline stage fails and 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import InvalidConfig, OffloadError
from .explorer import gap_instance, oracle_for, oracle_study, staged_run, summarize_study
from .fixtures import fixture_sidecar, fixture_sources, list_fixtures
from .pipeline import PipelineConfig, build_report, parse_op_weights, run_pipeline
from .report import FORMATS, emit_report

EXIT_OK, EXIT_PIPELINE, EXIT_CONFIG = 0, 1, 2


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("pipeline")
    g.add_argument("sources", nargs="*", help="C source and header files, headers first")
    g.add_argument("--fixture", action="append", default=[], metavar="NAME",
                   help=f"bundled demo program (repeatable): {', '.join(list_fixtures())}")
    g.add_argument("--inventory", metavar="PATH", help="loop inventory JSON instead of sources")
    g.add_argument("--top-a", type=int, default=5, dest="a", help="intensity survivors (default 5)")
    g.add_argument("--unroll", type=int, default=1, dest="b", help="unroll factor (default 1)")
    g.add_argument("--top-c", type=int, default=3, dest="c", help="efficiency survivors (default 3)")
    g.add_argument("--budget", type=int, default=4, dest="d", help="measured patterns (default 4)")
    g.add_argument("--budget-mode", choices=("total", "round1"), default="total")
    g.add_argument("--resource-cap", type=float, default=1.0)
    g.add_argument("--default-trip", type=int, default=1000)
    g.add_argument("--op-weights", default="1,1,1,1", metavar="ADD,MUL,DIV,OTHER")
    g.add_argument("--cost-model", metavar="PATH")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--report", metavar="PATH", help="write the report here; figures go beside it")
    g.add_argument("--format", choices=FORMATS, default="json")


def _measure(p: argparse.ArgumentParser):
    g = p.add_argument_group("measurement")
    g.add_argument("--backend", choices=("sim", "external"), default="sim")
    g.add_argument("--sidecar", metavar="PATH", help="timing sidecar for the sim backend")
    g.add_argument("--backend-config", metavar="PATH", help="command config for the external backend")
    g.add_argument("--repeats", type=int, default=1, help="timed runs per pattern; the minimum is kept")
    g.add_argument("--jobs", type=int, default=1, help="concurrent measurements when the backend allows it")
    g.add_argument("--workdir", metavar="DIR", help="scratch directory (else $OFFLOAD_WORKDIR, else a temp dir)")
    g.add_argument("--verify", action="store_true",
                   help="sim backend: check each kernel against the CPU loops with the evaluator")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loopoffload", description="Pick C loops worth moving to an FPGA.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("analyze", "discover loops and rank them by arithmetic intensity"),
        ("plan", "add resource estimates, the efficiency cut and the round-1 patterns"),
        ("run", "full search with measurements"),
    ):
        p = sub.add_parser(name, help=text, description=text)
        _common(p)
        _measure(p)
    o = sub.add_parser("oracle", help="staged search vs exhaustive oracle on synthetic instances")
    o.add_argument("--instances", type=int, default=100)
    o.add_argument("--max-loops", type=int, default=6)
    o.add_argument("--top-a", type=int, default=5, dest="a")
    o.add_argument("--top-c", type=int, default=3, dest="c")
    o.add_argument("--budget", type=int, default=4, dest="d")
    o.add_argument("--budget-mode", choices=("total", "round1"), default="total")
    o.add_argument("--seed", type=int, default=0, help="first seed")
    o.add_argument("--report", metavar="PATH")
    o.add_argument("--format", choices=FORMATS, default="json")
    return parser


def _inputs(args) -> list:
    """(name, sources or None, inventory or None, sidecar) per run."""
    given = sum(bool(x) for x in (args.sources, args.fixture, args.inventory))
    if given != 1:
        raise InvalidConfig("give exactly one of: source files, --fixture, --inventory")
    if args.fixture:
        if args.sidecar and len(args.fixture) > 1:
            raise InvalidConfig("--sidecar applies to one program; drop it to use each fixture's own")
        try:
            return [(f, fixture_sources(f), None, args.sidecar or str(fixture_sidecar(f))) for f in args.fixture]
        except FileNotFoundError as exc:
            raise InvalidConfig(str(exc)) from exc
    if args.inventory:
        return [(Path(args.inventory).stem, None, Path(args.inventory).read_text(), args.sidecar)]
    return [(None, args.sources, None, args.sidecar)]


def _write(data: bytes, report_path):
    if report_path:
        Path(report_path).parent.mkdir(parents=True, exist_ok=True)
        Path(report_path).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _pipeline(args) -> int:
    runs = []
    for name, sources, inventory, sidecar in _inputs(args):
        config = PipelineConfig(
            a=args.a, b=args.b, c=args.c, d=args.d, budget_mode=args.budget_mode,
            resource_cap=args.resource_cap, default_trip=args.default_trip,
            op_weights=parse_op_weights(args.op_weights), backend=args.backend, sidecar=sidecar,
            backend_config=args.backend_config, cost_model=args.cost_model, seed=args.seed,
            report=args.report, jobs=args.jobs, repeats=args.repeats, workdir=args.workdir,
            verify=args.verify,
        )
        runs.append(run_pipeline(config, sources=sources, inventory=inventory, stop_after=args.command, name=name))
    report = build_report(runs)
    _write(emit_report(report, args.format), args.report)
    if args.report:
        from .plotting import render_figures

        for fig in render_figures(report, args.report):
            print(f"figure: {fig}", file=sys.stderr)
    return EXIT_OK


def _oracle(args) -> int:
    if args.instances < 1 or not 2 <= args.max_loops <= 12:
        raise InvalidConfig("--instances must be >= 1 and --max-loops within 2..12")
    if args.c > args.a:
        raise InvalidConfig(f"top-c ({args.c}) may not exceed top-a ({args.a})")
    seeds = range(args.seed, args.seed + args.instances)
    rows = oracle_study(seeds, args.a, args.c, args.d, args.budget_mode, args.max_loops)
    gap = staged_run(gap_instance(), args.a, args.c, 4, "total")
    gap_best, gap_ms = oracle_for(gap.instance, [s.loop_id for s in gap.top_c])
    doc = {
        "schema": "loopoffload.oracle/1",
        "config": {"a": args.a, "c": args.c, "d": args.d, "budget_mode": args.budget_mode,
                   "first_seed": args.seed, "instances": args.instances, "max_loops": args.max_loops},
        "summary": summarize_study(rows),
        "rows": [
            {"seed": r.seed, "candidates": list(r.candidates), "staged_loops": list(r.staged_loops),
             "staged_ms": r.staged_ms, "oracle_loops": list(r.oracle_loops), "oracle_ms": r.oracle_ms,
             "ratio": r.ratio}
            for r in rows
        ],
        "constructed_gap": {
            "staged_loops": list(gap.outcome.best_loop_ids), "staged_ms": gap.outcome.best_ms,
            "oracle_loops": sorted(gap_best), "oracle_ms": gap_ms,
        },
    }
    if args.format == "json":
        data = (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()
    else:
        s = doc["summary"]
        g = doc["constructed_gap"]
        lines = [
            f"instances: {s['instances']}   staged == oracle: {s['optimal']}",
            f"staged/oracle ratio: min {s['min_ratio']:.4f}  q1 {s['q1_ratio']:.4f}  "
            f"median {s['median_ratio']:.4f}  q3 {s['q3_ratio']:.4f}  max {s['max_ratio']:.4f}",
            f"constructed gap: staged {g['staged_loops']} {g['staged_ms']:.3f} ms, "
            f"oracle {g['oracle_loops']} {g['oracle_ms']:.3f} ms",
            "",
        ]
        data = "\n".join(lines).encode()
    _write(data, args.report)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "oracle":
            return _oracle(args)
        return _pipeline(args)
    except InvalidConfig as exc:
        print(f"loopoffload: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OffloadError, OSError) as exc:
        print(f"loopoffload: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
