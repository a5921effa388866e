"""Grid experiments over instances and strategy configs, plus run-length distributions.

Runs are journaled to ``traces.jsonl`` as they finish so an interrupted
experiment can resume. Final outputs are always rewritten in a fixed order
(instance, config_id, repetition) so they do not depend on completion order.
"""
from __future__ import annotations

import bisect
import csv
import hashlib
import io
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import yaml

from .benchgen import builtin_suite, generate_instance
from .core import SegmentProblem, read_instance
from .optimizer import OptimizerConfig, RunTrace, optimize
from .strategies import ENUMERATION_LIMIT, GuidingConfig, SamplingConfig

log = logging.getLogger(__name__)

DEFAULT_TARGETS = tuple([10.0 ** -k for k in range(9)] + [0.0])
DEFAULT_REPETITIONS = 20
DEFAULT_BUDGET = 100_000

GUIDING_CHOICES = {
    "full": ("full", False),
    "direction-random": ("direction", False),
    "direction-guided": ("direction", True),
    "range-random": ("range", False),
    "range-guided": ("range", True),
}

DEFAULT_GRID = {
    "dimension_mode": ["single", "multi"],
    "guiding": list(GUIDING_CHOICES),
    "step_size": [0.5, 1, 2, 4, 8],
    "search_width": [0, 1, 3, 5, 10],
    "sampling": ["random", "orthogonal", "exhaustive"],
    "sample_size": [5, 10, 25, 100],
}

BASE_COLUMNS = [
    "instance", "config_id", "guiding", "guided", "step_size", "search_width", "sampling",
    "sample_size", "dimension_mode", "repetition", "seed", "total_evaluations", "best_objective",
]


class PlanError(ValueError):
    """The plan file is malformed."""


# -- grid --------------------------------------------------------------------

def expand_grid(axes: dict | None = None, budget: int = DEFAULT_BUDGET) -> list[OptimizerConfig]:
    """Cartesian product of grid axes with irrelevant axes collapsed.

    Step size and search width only matter for range guiding; sample size is
    ignored by exhaustive sampling.
    """
    axes = {**DEFAULT_GRID, **(axes or {})}
    unknown = set(axes) - set(DEFAULT_GRID)
    if unknown:
        raise PlanError(f"unknown grid axes: {sorted(unknown)}")
    configs: dict[str, OptimizerConfig] = {}
    for dim_mode, guiding, sampling in itertools.product(
            axes["dimension_mode"], axes["guiding"], axes["sampling"]):
        if guiding not in GUIDING_CHOICES:
            raise PlanError(f"unknown guiding {guiding!r}; choose from {list(GUIDING_CHOICES)}")
        mode, guided = GUIDING_CHOICES[guiding]
        steps = axes["step_size"] if mode == "range" else [1.0]
        widths = axes["search_width"] if mode == "range" else [0]
        sizes = axes["sample_size"] if sampling != "exhaustive" else [1]
        for step, width, size in itertools.product(steps, widths, sizes):
            cfg = OptimizerConfig(
                guiding=GuidingConfig(mode, guided, float(step), int(width)),
                sampling=SamplingConfig(sampling, int(size)),
                dimension_mode=dim_mode, budget=budget)
            configs.setdefault(cfg.canonical(), cfg)
    return list(configs.values())


def max_candidates_per_iteration(cfg: OptimizerConfig, n: int) -> int:
    """Upper bound on distinct windows one exhaustive iteration may enumerate."""
    g = cfg.guiding
    if cfg.dimension_mode == "single":
        per_dim = n if g.mode != "range" else min(n, 2 * g.search_width + 1)
        return per_dim
    if g.mode == "range":
        return min((2 * g.search_width + 1) ** 2, n * (n + 1) // 2)
    return n * (n + 1) // 2


def is_feasible(cfg: OptimizerConfig, n: int) -> bool:
    if cfg.sampling.mode != "exhaustive":
        return True
    bound = max_candidates_per_iteration(cfg, n)
    return bound <= cfg.budget and bound <= ENUMERATION_LIMIT


def cell_seed(base_seed: int, instance: str, config_id: str, repetition: int) -> int:
    key = f"{base_seed}|{instance}|{config_id}|{repetition}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


# -- plan --------------------------------------------------------------------

@dataclass
class ExperimentPlan:
    instances: list[str]
    configs: list[OptimizerConfig]
    repetitions: int = DEFAULT_REPETITIONS
    base_seed: int = 0
    budget: int = DEFAULT_BUDGET
    targets: tuple[float, ...] = DEFAULT_TARGETS
    suite_seed: int = 0
    suite_M: int = 20
    suite_N: int = 1000
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise PlanError("repetitions must be >= 1")
        if not self.configs:
            raise PlanError("grid is empty")
        if not self.instances:
            raise PlanError("no instances listed")
        self.configs = [_with(c, budget=self.budget) for c in self.configs]

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentPlan":
        path = Path(path)
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        if not isinstance(data, dict):
            raise PlanError(f"{path}: plan must be a mapping")
        return cls.from_dict(data, base_dir=path.parent)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "ExperimentPlan":
        known = {"instances", "grid", "repetitions", "base_seed", "budget", "targets", "suite"}
        extra = set(data) - known
        if extra:
            raise PlanError(f"unknown plan keys: {sorted(extra)}")
        budget = int(data.get("budget", DEFAULT_BUDGET))
        suite = data.get("suite") or {}
        targets = data.get("targets", DEFAULT_TARGETS)
        instances = data.get("instances", [s.name for s in builtin_suite()])
        return cls(
            instances=[str(i) for i in instances],
            configs=expand_grid(data.get("grid"), budget),
            repetitions=int(data.get("repetitions", DEFAULT_REPETITIONS)),
            base_seed=int(data.get("base_seed", 0)),
            budget=budget,
            targets=tuple(sorted((float(t) for t in targets), reverse=True)),
            suite_seed=int(suite.get("seed", 0)),
            suite_M=int(suite.get("M", 20)),
            suite_N=int(suite.get("N", 1000)),
            base_dir=base_dir or Path.cwd(),
        )

    def load_instance(self, ref: str) -> SegmentProblem:
        builtin = {s.name: s for s in builtin_suite(self.suite_seed, self.suite_M, self.suite_N)}
        if ref in builtin:
            return generate_instance(builtin[ref])
        path = Path(ref)
        if not path.is_absolute():
            path = self.base_dir / path
        return read_instance(path)


def _with(cfg: OptimizerConfig, **changes) -> OptimizerConfig:
    return OptimizerConfig(**{**cfg.__dict__, **changes})


# -- results -----------------------------------------------------------------

@dataclass
class RunRecord:
    instance: str
    config: OptimizerConfig
    repetition: int
    trace: RunTrace

    @property
    def key(self) -> tuple[str, str, int]:
        return self.instance, self.config.canonical(), self.repetition

    def row(self, targets: Sequence[float] = ()) -> dict:
        g, s = self.config.guiding, self.config.sampling
        row = {
            "instance": self.instance,
            "config_id": self.config.canonical(),
            "guiding": g.mode,
            "guided": g.guided,
            "step_size": g.step_size,
            "search_width": g.search_width,
            "sampling": s.mode,
            "sample_size": s.sample_size,
            "dimension_mode": self.config.dimension_mode,
            "repetition": self.repetition,
            "seed": self.config.seed,
            "total_evaluations": self.trace.total_evaluations,
            "best_objective": self.trace.final_best[1],
        }
        for t in targets:
            row[target_column(t)] = solve_point(self.trace, t)
        return row

    def to_json(self) -> dict:
        return {"instance": self.instance, "config": config_to_dict(self.config),
                "repetition": self.repetition, "trace": self.trace.to_dict()}

    @classmethod
    def from_json(cls, d: dict) -> "RunRecord":
        return cls(d["instance"], config_from_dict(d["config"]), int(d["repetition"]),
                   RunTrace.from_dict(d["trace"]))


def config_to_dict(cfg: OptimizerConfig) -> dict:
    g, s = cfg.guiding, cfg.sampling
    return {"guiding": g.mode, "guided": g.guided, "step_size": g.step_size,
            "search_width": g.search_width, "sampling": s.mode, "sample_size": s.sample_size,
            "dimension_mode": cfg.dimension_mode, "budget": cfg.budget, "seed": cfg.seed}


def config_from_dict(d: dict) -> OptimizerConfig:
    return OptimizerConfig(
        guiding=GuidingConfig(d["guiding"], bool(d["guided"]), float(d["step_size"]),
                              int(d["search_width"])),
        sampling=SamplingConfig(d["sampling"], int(d["sample_size"])),
        dimension_mode=d["dimension_mode"], budget=int(d["budget"]), seed=int(d["seed"]))


@dataclass
class ResultTable:
    records: list[RunRecord] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)
    errors: list[tuple[str, str]] = field(default_factory=list)

    def sort(self) -> None:
        self.records.sort(key=lambda r: r.key)
        self.skipped.sort()
        self.errors.sort()

    def rows(self, targets: Sequence[float] = ()) -> list[dict]:
        return [r.row(targets) for r in sorted(self.records, key=lambda r: r.key)]

    def traces(self) -> list[RunTrace]:
        return [r.trace for r in self.records]


def target_column(target: float) -> str:
    return f"solve@{target:.0e}" if target else "solve@0"


# -- running -----------------------------------------------------------------

def _run_cell(problem: SegmentProblem, cfg: OptimizerConfig) -> RunTrace:
    return optimize(problem, cfg)


def run_experiment(plan: ExperimentPlan, out_dir: str | Path | None = None,
                   resume: bool = False, jobs: int = 1,
                   progress: Callable[[RunRecord], None] | None = None) -> ResultTable:
    table = ResultTable()
    journal = None
    done: dict[tuple, RunRecord] = {}
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        journal_path = out_dir / "traces.jsonl"
        if resume and journal_path.exists():
            for rec in read_traces(journal_path):
                done[rec.key] = rec
        elif journal_path.exists():
            journal_path.unlink()
        journal = journal_path.open("a", encoding="utf-8")

    todo: list[tuple[SegmentProblem, str, OptimizerConfig, int]] = []
    for ref in plan.instances:
        try:
            problem = plan.load_instance(ref)
        except (OSError, ValueError) as exc:
            log.error("instance %s: %s", ref, exc)
            table.errors.append((ref, str(exc)))
            continue
        for cfg in plan.configs:
            cid = cfg.canonical()
            if not is_feasible(cfg, problem.N):
                table.skipped.append((ref, cid))
                continue
            for rep in range(plan.repetitions):
                cell = _with(cfg, seed=cell_seed(plan.base_seed, ref, cid, rep))
                key = (ref, cid, rep)
                if key in done and done[key].config == cell:
                    table.records.append(done[key])
                else:
                    todo.append((problem, ref, cell, rep))

    def finish(ref: str, cell: OptimizerConfig, rep: int, trace: RunTrace) -> None:
        rec = RunRecord(ref, cell, rep, trace)
        table.records.append(rec)
        if journal is not None:
            journal.write(json.dumps(rec.to_json()) + "\n")
            journal.flush()
        if progress is not None:
            progress(rec)

    try:
        if jobs <= 1:
            for problem, ref, cell, rep in todo:
                finish(ref, cell, rep, _run_cell(problem, cell))
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = {pool.submit(_run_cell, problem, cell): (ref, cell, rep)
                           for problem, ref, cell, rep in todo}
                for fut in as_completed(futures):
                    finish(*futures[fut], fut.result())
    finally:
        if journal is not None:
            journal.close()

    table.sort()
    if out_dir is not None:
        write_outputs(table, out_dir, plan.targets)
    return table


def write_outputs(table: ResultTable, out_dir: Path, targets: Sequence[float]) -> None:
    write_traces(table.records, out_dir / "traces.jsonl")
    export_results(table, "csv", out_dir / "results.csv", targets)
    with (out_dir / "skipped.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance", "config_id", "reason"])
        w.writerows([(i, c, "infeasible exhaustive enumeration") for i, c in table.skipped])
        w.writerows([(i, "", f"error: {msg}") for i, msg in table.errors])


def write_traces(records: Iterable[RunRecord], path: Path) -> None:
    records = sorted(records, key=lambda r: r.key)
    path.write_text("".join(json.dumps(r.to_json()) + "\n" for r in records), encoding="utf-8")


def read_traces(path: str | Path) -> list[RunRecord]:
    path = Path(path)
    if path.is_dir():
        path = path / "traces.jsonl"
    out = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                out.append(RunRecord.from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError):
                # torn final line of an interrupted run
                log.warning("ignoring unreadable journal line in %s", path)
    return out


# -- run-length distributions --------------------------------------------------

@dataclass(frozen=True)
class RLDCurve:
    targets: tuple[float, ...]
    points: tuple[tuple[int, float], ...]
    pairs: int

    def proportion_at(self, evaluations: int) -> float:
        i = bisect.bisect_right([e for e, _ in self.points], evaluations)
        return self.points[i - 1][1] if i else 0.0


def solve_point(trace: RunTrace, target: float) -> int | None:
    for imp in trace.improvements:
        if imp.best_objective <= target:
            return imp.evaluations_used
    return None


def compute_rld(traces: Sequence[RunTrace], targets: Sequence[float] = DEFAULT_TARGETS) -> RLDCurve:
    """Empirical CDF over (run, target) pairs of evaluations to reach each target."""
    if not traces:
        raise ValueError("need at least one trace")
    targets = tuple(float(t) for t in targets)
    if list(targets) != sorted(targets, reverse=True):
        raise ValueError("targets must be sorted in descending order")
    if not targets:
        raise ValueError("need at least one target")
    hits = sorted(e for tr in traces for t in targets
                  if (e := solve_point(tr, t)) is not None)
    total = len(traces) * len(targets)
    points = []
    for i, e in enumerate(hits):
        if i + 1 < len(hits) and hits[i + 1] == e:
            continue
        points.append((e, (i + 1) / total))
    return RLDCurve(targets, tuple(points), total)


GROUPINGS: dict[str, Callable[[RunRecord], str]] = {
    "config": lambda r: r.config.canonical(),
    "instance": lambda r: r.instance,
    "instance-config": lambda r: f"{r.instance}:{r.config.canonical()}",
    "dimension_mode": lambda r: r.config.dimension_mode,
    "guiding": lambda r: (r.config.guiding.mode if r.config.guiding.mode == "full" else
                          f"{r.config.guiding.mode}-{'guided' if r.config.guiding.guided else 'random'}"),
    "step_size": lambda r: f"step={r.config.guiding.step_size:g}",
    "search_width": lambda r: f"width={r.config.guiding.search_width}",
}


def group_curves(records: Iterable[RunRecord], by: str = "config",
                 targets: Sequence[float] = DEFAULT_TARGETS,
                 where: Callable[[RunRecord], bool] | None = None) -> dict[str, RLDCurve]:
    key = GROUPINGS[by]
    groups: dict[str, list[RunTrace]] = {}
    for r in records:
        if where is None or where(r):
            groups.setdefault(key(r), []).append(r.trace)
    return {name: compute_rld(ts, targets) for name, ts in sorted(groups.items())}


def comparison_curves(records: Sequence[RunRecord],
                      targets: Sequence[float] = DEFAULT_TARGETS) -> dict[str, RLDCurve]:
    """Per-instance series for single vs multi, and random vs guided direction/range."""
    out: dict[str, RLDCurve] = {}
    for ref in sorted({r.instance for r in records}):
        mine = [r for r in records if r.instance == ref]
        inst = Path(ref).stem
        for name, curve in group_curves(mine, "dimension_mode", targets).items():
            out[f"{inst}/dimension/{name}"] = curve
        for mode in ("direction", "range"):
            sel = group_curves(mine, "guiding", targets,
                               where=lambda r, m=mode: r.config.guiding.mode == m)
            for name, curve in sel.items():
                out[f"{inst}/{mode}/{name}"] = curve
        ranged = [r for r in mine if r.config.guiding.mode == "range" and r.config.guiding.guided]
        for axis in ("step_size", "search_width"):
            for name, curve in group_curves(ranged, axis, targets).items():
                out[f"{inst}/range-guided/{name}"] = curve
    return out


# -- exports -----------------------------------------------------------------

def _open_for_write(path: str | Path):
    path = Path(path)
    try:
        return path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def results_csv(table: ResultTable, targets: Sequence[float] = ()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BASE_COLUMNS + [target_column(t) for t in targets])
    for row in table.rows(targets):
        w.writerow([_cell(v) for v in row.values()])
    return buf.getvalue()


def results_json(table: ResultTable, targets: Sequence[float] = ()) -> str:
    doc = {"targets": list(targets), "rows": table.rows(targets),
           "skipped": [list(s) for s in table.skipped]}
    return json.dumps(doc, indent=1) + "\n"


def export_results(table: ResultTable, fmt: str, path: str | Path,
                   targets: Sequence[float] = ()) -> Path:
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    text = results_csv(table, targets) if fmt == "csv" else results_json(table, targets)
    with _open_for_write(path) as fh:
        fh.write(text)
    return Path(path)


_INT_COLS = {"search_width", "sample_size", "repetition", "seed", "total_evaluations"}
_FLOAT_COLS = {"step_size", "best_objective"}


def _parse_cell(col: str, value: str):
    if col in _INT_COLS:
        return int(value)
    if col in _FLOAT_COLS:
        return float(value)
    if col == "guided":
        return value == "True"
    if col.startswith("solve@"):
        return int(value) if value else None
    return value


def import_results(path: str | Path) -> list[dict]:
    """Read rows written by :func:`export_results` back with their types."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return json.loads(text)["rows"]
    reader = csv.DictReader(io.StringIO(text))
    return [{k: _parse_cell(k, v) for k, v in row.items()} for row in reader]


def plot_data_csv(curves: dict[str, RLDCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "evaluations", "proportion"])
    for name, curve in curves.items():
        w.writerow([name, 0, repr(0.0)])
        for e, p in curve.points:
            w.writerow([name, e, repr(p)])
    return buf.getvalue()


def emit_plot_data(curves: dict[str, RLDCurve], path: str | Path) -> Path:
    if not curves:
        raise ValueError("no curves to emit")
    with _open_for_write(path) as fh:
        fh.write(plot_data_csv(curves))
    return Path(path)


def load_plot_data(path: str | Path) -> dict[str, list[tuple[int, float]]]:
    out: dict[str, list[tuple[int, float]]] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["series"], []).append((int(row["evaluations"]),
                                                      float(row["proportion"])))
    return out


def is_valid_step_function(points: Sequence[tuple[int, float]]) -> bool:
    evals = [e for e, _ in points]
    props = [p for _, p in points]
    return (all(0.0 <= p <= 1.0 for p in props)
            and all(a <= b for a, b in zip(evals, evals[1:]))
            and all(a <= b for a, b in zip(props, props[1:]))
            and not any(math.isnan(p) for p in props))
