"""Segment optimization problem: datasets, windows, aggregations and the objective.

A problem holds ``M`` vectors of length ``N`` and a hidden reference window.
The objective of a candidate window is the sum of squared differences between
the per-row aggregate over the candidate and over the reference.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

BRUTE_FORCE_MAX_N = 2000


class BudgetExhausted(Exception):
    """Raised when an objective evaluation is requested past the budget."""


class Window(NamedTuple):
    """Inclusive index pair ``start <= end``."""

    start: int
    end: int

    def width(self) -> int:
        return self.end - self.start + 1

    def is_valid(self, n: int) -> bool:
        return 0 <= self.start <= self.end <= n - 1


def make_window(start: int, end: int, n: int) -> Window:
    w = Window(int(start), int(end))
    if not w.is_valid(n):
        raise ValueError(f"invalid window {tuple(w)} for vector length {n}")
    return w


class Aggregation(str, enum.Enum):
    MEAN = "mean"
    SUM = "sum"
    MIN = "min"
    MAX = "max"
    STDDEV = "stddev"
    MEDIAN = "median"


def _sequential_sum(columns: np.ndarray) -> np.ndarray:
    # reducing over the outer axis of a C-contiguous block adds row after row,
    # i.e. strictly left to right per column (np.sum over the inner axis is pairwise)
    return np.add.reduce(columns, axis=0)


def aggregate_columns(block: np.ndarray, agg: Aggregation) -> np.ndarray:
    """Aggregate a ``width x M`` block (one column per dataset row)."""
    width = block.shape[0]
    if width == 0:
        raise ValueError("cannot aggregate an empty slice")
    if agg is Aggregation.MEAN:
        return _sequential_sum(block) / width
    if agg is Aggregation.SUM:
        return _sequential_sum(block)
    if agg is Aggregation.MIN:
        return block.min(axis=0)
    if agg is Aggregation.MAX:
        return block.max(axis=0)
    if agg is Aggregation.STDDEV:
        dev = block - _sequential_sum(block) / width
        return np.sqrt(_sequential_sum(dev * dev) / width)
    if agg is Aggregation.MEDIAN:
        return np.median(block, axis=0)
    raise AssertionError(agg)


def aggregate_rows(rows: np.ndarray, agg: Aggregation | str) -> np.ndarray:
    """Aggregate every row of a 2-D block (rows already sliced to the window)."""
    return aggregate_columns(np.ascontiguousarray(np.asarray(rows, dtype=np.float64).T),
                             Aggregation(agg))


def aggregate(values: Sequence[float], agg: Aggregation | str) -> float:
    """Aggregate a single non-empty slice."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("aggregate needs a non-empty 1-D slice")
    return float(aggregate_rows(arr[None, :], agg)[0])


def slice_window(row: Sequence[float] | np.ndarray, w: Window) -> np.ndarray:
    arr = np.asarray(row)
    if not Window(*w).is_valid(arr.shape[-1]):
        raise ValueError(f"invalid window {tuple(w)} for vector length {arr.shape[-1]}")
    return arr[..., w[0] : w[1] + 1]


@dataclass(frozen=True)
class VectorDataset:
    samples: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.samples, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError("samples must be a 2-D array (M rows x N columns)")
        if arr.shape[0] < 1 or arr.shape[1] < 2:
            raise ValueError(f"need M >= 1 and N >= 2, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def M(self) -> int:
        return self.samples.shape[0]

    @property
    def N(self) -> int:
        return self.samples.shape[1]


@dataclass
class EvaluationCounter:
    budget: int
    used: int = 0

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError("budget must be >= 1")

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def charge(self) -> None:
        if self.used >= self.budget:
            raise BudgetExhausted(f"budget of {self.budget} evaluations exhausted")
        self.used += 1


@dataclass(frozen=True)
class SegmentProblem:
    dataset: VectorDataset
    aggregation: Aggregation
    reference: Window
    name: str = "problem"
    generator_seed: int | None = None
    metadata: dict = field(default_factory=dict, compare=False)
    reference_aggregates: np.ndarray = field(init=False, repr=False, compare=False)
    _columns: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "aggregation", Aggregation(self.aggregation))
        columns = np.ascontiguousarray(self.dataset.samples.T)
        columns.setflags(write=False)
        object.__setattr__(self, "_columns", columns)
        ref = make_window(self.reference[0], self.reference[1], self.dataset.N)
        object.__setattr__(self, "reference", ref)
        aggs = self.aggregates(ref)
        aggs.setflags(write=False)
        object.__setattr__(self, "reference_aggregates", aggs)

    @classmethod
    def from_rows(cls, rows, aggregation="mean", reference=(0, 1), **kwargs) -> "SegmentProblem":
        return cls(VectorDataset(np.asarray(rows, dtype=np.float64)), Aggregation(aggregation),
                   Window(*reference), **kwargs)

    @property
    def M(self) -> int:
        return self.dataset.M

    @property
    def N(self) -> int:
        return self.dataset.N

    @property
    def window_count(self) -> int:
        return self.N * (self.N + 1) // 2

    def aggregates(self, w: Window) -> np.ndarray:
        return aggregate_columns(self._columns[w[0] : w[1] + 1], self.aggregation)

    def score(self, w: Window) -> float:
        """Objective value without touching any budget."""
        if not (0 <= w[0] <= w[1] < self.N):
            raise ValueError(f"invalid window {tuple(w)} for vector length {self.N}")
        d = self.aggregates(w) - self.reference_aggregates
        return float(_sequential_sum((d * d)[:, None])[0])


def objective(p: SegmentProblem, w: Window, counter: EvaluationCounter) -> float:
    """Evaluate ``w`` and charge exactly one evaluation to ``counter``."""
    if not (0 <= w[0] <= w[1] < p.N):
        raise ValueError(f"invalid window {tuple(w)} for vector length {p.N}")
    counter.charge()
    return p.score(w)


def brute_force_optimum(p: SegmentProblem) -> tuple[Window, float]:
    """Enumerate every window; ties go to the smaller start, then smaller end."""
    if p.N > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to N <= {BRUTE_FORCE_MAX_N}, got {p.N}")
    best_w, best_v = None, np.inf
    for s in range(p.N):
        for e in range(s, p.N):
            v = p.score(Window(s, e))
            if v < best_v:
                best_w, best_v = Window(s, e), v
    return best_w, best_v


def window_from_index(k: int, n: int, min_width: int = 1) -> Window:
    """Map ``k`` in ``[0, count)`` to a window of width >= ``min_width``.

    Windows are ordered by start, then end.
    """
    # windows with start s: n - s - min_width + 1
    s = 0
    while True:
        row = n - s - min_width + 1
        if row <= 0:
            raise IndexError(k)
        if k < row:
            return Window(s, s + min_width - 1 + k)
        k -= row
        s += 1


def window_count(n: int, min_width: int = 1) -> int:
    m = n - min_width + 1
    return m * (m + 1) // 2 if m > 0 else 0


# -- instance files ----------------------------------------------------------

FORMAT_TAG = "# segopt instance v1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_instance(p: SegmentProblem, path: str | Path) -> Path:
    path = Path(path)
    lines = [
        FORMAT_TAG,
        f"name: {p.name}",
        f"M: {p.M}",
        f"N: {p.N}",
        f"aggregation: {p.aggregation.value}",
        f"reference_start: {p.reference.start}",
        f"reference_end: {p.reference.end}",
        f"generator_seed: {'' if p.generator_seed is None else p.generator_seed}",
    ]
    for key, value in sorted(p.metadata.items()):
        lines.append(f"meta.{key}: {value}")
    lines.append("rows:")
    for row in p.dataset.samples:
        lines.append(" ".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_instance(path: str | Path) -> SegmentProblem:
    path = Path(path)
    text = path.read_text(encoding="utf-8").splitlines()
    header: dict[str, str] = {}
    meta: dict[str, str] = {}
    rows: list[list[float]] = []
    in_rows = False
    for lineno, line in enumerate(text, 1):
        if in_rows:
            if line.strip():
                rows.append([float(tok) for tok in line.split()])
            continue
        if not line.strip() or line.startswith("#"):
            continue
        if line.strip() == "rows:":
            in_rows = True
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key: value'")
        key, value = key.strip(), value.strip()
        if key.startswith("meta."):
            meta[key[5:]] = value
        else:
            header[key] = value
    try:
        m, n = int(header["M"]), int(header["N"])
        seed = header.get("generator_seed", "")
        problem = SegmentProblem(
            VectorDataset(np.array(rows, dtype=np.float64)),
            Aggregation(header["aggregation"]),
            Window(int(header["reference_start"]), int(header["reference_end"])),
            name=header.get("name", path.stem),
            generator_seed=int(seed) if seed else None,
            metadata=meta,
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing field {exc.args[0]!r}") from None
    if problem.M != m or problem.N != n:
        raise ValueError(f"{path}: header says {m}x{n}, rows are {problem.M}x{problem.N}")
    return problem
