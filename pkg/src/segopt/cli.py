"""Command-line entry point: ``segopt generate|solve|experiment|rld|export``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .benchgen import builtin_suite, generate_instance, load_spec
from .core import read_instance, write_instance
from .harness import (DEFAULT_TARGETS, GROUPINGS, ExperimentPlan, PlanError, comparison_curves,
                      emit_plot_data, group_curves, plot_data_csv, read_traces, results_csv,
                      results_json, run_experiment, ResultTable, is_feasible)
from .optimizer import OptimizerConfig, optimize
from .strategies import GUIDING_MODES, SAMPLING_MODES, GuidingConfig, SamplingConfig

log = logging.getLogger("segopt")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INFEASIBLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _targets(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad target list {text!r}") from None
    return sorted(values, reverse=True)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="segopt", description="Segment optimization benchmarks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write benchmark instance files")
    which = gen.add_mutually_exclusive_group(required=True)
    which.add_argument("--suite", action="store_true", help="all built-in instances x1..x6")
    which.add_argument("--spec", help="built-in instance name (e.g. x6) or a YAML spec file")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--rows", type=_positive_int, default=20, help="M, rows per instance")
    gen.add_argument("--length", type=int, default=1000, help="N, vector length")
    gen.add_argument("--out", required=True, help="output directory")

    solve = sub.add_parser("solve", help="optimize one instance")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--guiding", choices=GUIDING_MODES, default="full")
    solve.add_argument("--guided", action="store_true",
                       help="use the gradient for direction/range (default: random variant)")
    solve.add_argument("--sampling", choices=SAMPLING_MODES, default="random")
    solve.add_argument("--dimension-mode", choices=("single", "multi"), default="multi")
    solve.add_argument("--budget", type=_positive_int, default=100_000)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--step-size", type=float, default=1.0)
    solve.add_argument("--search-width", type=int, default=0)
    solve.add_argument("--sample-size", type=_positive_int, default=10)
    solve.add_argument("--trace", help="write the run trace as JSON to this file")

    exp = sub.add_parser("experiment", help="run a grid experiment from a plan file")
    exp.add_argument("--plan", required=True)
    exp.add_argument("--out", required=True)
    exp.add_argument("--resume", action="store_true")
    exp.add_argument("--jobs", type=_positive_int, default=1)

    rld = sub.add_parser("rld", help="run-length distributions from stored traces")
    rld.add_argument("--traces", required=True, help="experiment directory or traces.jsonl")
    rld.add_argument("--targets", type=_targets, default=list(DEFAULT_TARGETS))
    rld.add_argument("--group-by", choices=[*GROUPINGS, "comparisons"], default="config")
    rld.add_argument("--out", help="output CSV (default: stdout)")

    export = sub.add_parser("export", help="result table as CSV or JSON")
    export.add_argument("--traces", required=True, help="experiment directory or traces.jsonl")
    export.add_argument("--format", choices=("csv", "json"), default="csv")
    export.add_argument("--targets", type=_targets, default=list(DEFAULT_TARGETS))
    export.add_argument("--out", help="output file (default: stdout)")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    specs = builtin_suite(args.seed, args.rows, args.length)
    if args.spec and Path(args.spec).is_file():
        specs = [load_spec(args.spec)]
    elif args.spec:
        specs = [s for s in specs if s.name == args.spec]
        if not specs:
            raise UsageError(f"unknown instance {args.spec!r}")
    for spec in specs:
        path = write_instance(generate_instance(spec), out / f"{spec.name}.txt")
        log.info("wrote %s", path)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = OptimizerConfig(
        guiding=GuidingConfig(args.guiding, args.guided, args.step_size, args.search_width),
        sampling=SamplingConfig(args.sampling, args.sample_size),
        dimension_mode=args.dimension_mode, budget=args.budget, seed=args.seed)
    problem = read_instance(args.instance)
    if not is_feasible(cfg, problem.N):
        log.error("exhaustive sampling is infeasible for N=%d under budget %d", problem.N, cfg.budget)
        return EXIT_INFEASIBLE
    t0 = time.perf_counter()
    trace = optimize(problem, cfg)
    elapsed = time.perf_counter() - t0
    w, v = trace.final_best
    print(f"instance={problem.name} config={cfg.canonical()} best_objective={v!r} "
          f"best_window={w.start},{w.end} evaluations={trace.total_evaluations} "
          f"improvements={len(trace.improvements)}")
    log.info("wall time %.2fs (stencil evals %d, candidate evals %d)",
             elapsed, trace.stencil_evaluations, trace.candidate_evaluations)
    if args.trace:
        Path(args.trace).write_text(json.dumps(trace.to_dict()) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_experiment(args) -> int:
    plan = ExperimentPlan.from_file(args.plan)
    counter = {"n": 0}

    def progress(rec):
        counter["n"] += 1
        log.debug("done %s %s rep=%d best=%g", rec.instance, rec.config.canonical(),
                  rec.repetition, rec.trace.final_best[1])

    table = run_experiment(plan, args.out, resume=args.resume, jobs=args.jobs, progress=progress)
    log.info("%d runs (%d new), %d skipped cells, %d errors", len(table.records), counter["n"],
             len(table.skipped), len(table.errors))
    if not table.records and table.skipped:
        log.error("every cell of the plan is infeasible")
        return EXIT_INFEASIBLE
    return EXIT_IO if table.errors and not table.records else EXIT_OK


def cmd_rld(args) -> int:
    records = read_traces(args.traces)
    if not records:
        raise UsageError("no traces found")
    if args.group_by == "comparisons":
        curves = comparison_curves(records, args.targets)
    else:
        curves = group_curves(records, args.group_by, args.targets)
    if args.out:
        emit_plot_data(curves, args.out)
    else:
        sys.stdout.write(plot_data_csv(curves))
    return EXIT_OK


def cmd_export(args) -> int:
    table = ResultTable(read_traces(args.traces))
    table.sort()
    render = results_csv if args.format == "csv" else results_json
    _emit(render(table, args.targets), args.out)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "experiment": cmd_experiment,
            "rld": cmd_rld, "export": cmd_export}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, PlanError) as exc:
        print(f"segopt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"segopt: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"segopt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
