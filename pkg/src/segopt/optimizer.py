"""Elitist guide-then-sample loop under a hard evaluation budget."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (BudgetExhausted, EvaluationCounter, SegmentProblem, Window,
                   objective, window_from_index)
from .gradient import DIMENSIONS, END, START, dimension_bounds, estimate_gradient, with_index
from .strategies import GuidingConfig, SamplingConfig, SearchRegion, guide, sample

DIMENSION_MODES = ("single", "multi")

# iterations in a row that spend no evaluation before a run is declared stalled
MAX_IDLE_ITERATIONS = 10_000


@dataclass(frozen=True)
class OptimizerConfig:
    guiding: GuidingConfig = field(default_factory=GuidingConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    dimension_mode: str = "multi"
    budget: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dimension_mode not in DIMENSION_MODES:
            raise ValueError(f"unknown dimension mode {self.dimension_mode!r}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")

    def canonical(self) -> str:
        """Identifier of the strategy cell, independent of budget and seed."""
        g, s = self.guiding, self.sampling
        parts = [self.dimension_mode]
        if g.mode == "full":
            parts.append("full")
        else:
            parts.append(f"{g.mode}-{'guided' if g.guided else 'random'}")
        if g.mode == "range":
            parts.append(f"step={g.step_size:g}")
            parts.append(f"width={g.search_width}")
        parts.append(s.mode)
        if s.mode != "exhaustive":
            parts.append(f"k={s.sample_size}")
        return "/".join(parts)


@dataclass(frozen=True)
class Improvement:
    evaluations_used: int
    best_objective: float
    best_window: Window


@dataclass
class RunTrace:
    improvements: list[Improvement]
    total_evaluations: int
    final_best: tuple[Window, float]
    stencil_evaluations: int = 0
    candidate_evaluations: int = 0
    iterations: int = 0
    stalled: bool = False

    def to_dict(self) -> dict:
        return {
            "improvements": [[i.evaluations_used, i.best_objective, list(i.best_window)]
                             for i in self.improvements],
            "total_evaluations": self.total_evaluations,
            "final_best": [list(self.final_best[0]), self.final_best[1]],
            "stencil_evaluations": self.stencil_evaluations,
            "candidate_evaluations": self.candidate_evaluations,
            "iterations": self.iterations,
            "stalled": self.stalled,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunTrace":
        return cls(
            improvements=[Improvement(int(e), float(v), Window(*w)) for e, v, w in d["improvements"]],
            total_evaluations=int(d["total_evaluations"]),
            final_best=(Window(*d["final_best"][0]), float(d["final_best"][1])),
            stencil_evaluations=int(d.get("stencil_evaluations", 0)),
            candidate_evaluations=int(d.get("candidate_evaluations", 0)),
            iterations=int(d.get("iterations", 0)),
            stalled=bool(d.get("stalled", False)),
        )


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def select_dimensions(mode: str, iteration: int) -> tuple[str, ...]:
    if mode == "multi":
        return DIMENSIONS
    if mode == "single":
        return (START,) if iteration % 2 == 0 else (END,)
    raise ValueError(f"unknown dimension mode {mode!r}")


def clamp_candidate(start: int, end: int, n: int) -> Window:
    start = min(max(int(start), 0), n - 1)
    end = min(max(int(end), 0), n - 1)
    if start > end:
        start, end = end, start
    return Window(start, end)


def random_window(n: int, rng: np.random.Generator) -> Window:
    """Uniform draw over all ``n(n+1)/2`` valid windows."""
    return window_from_index(int(rng.integers(n * (n + 1) // 2)), n)


def search_bounds(w: Window, dim: str, n: int, mode: str) -> tuple[int, int]:
    # in multi mode both indices move together, so each may span the whole
    # vector; crossed pairs are repaired by clamp_candidate
    if mode == "multi":
        return 0, n - 1
    return dimension_bounds(w, dim, n)


def build_region(p: SegmentProblem, incumbent: Window, dims: tuple[str, ...],
                 cfg: OptimizerConfig, gradient, rng: np.random.Generator) -> SearchRegion:
    intervals = []
    for dim in dims:
        lo, hi = search_bounds(incumbent, dim, p.N, cfg.dimension_mode)
        current = incumbent.start if dim == START else incumbent.end
        g = gradient.get(dim) if gradient is not None else None
        intervals.append(guide(cfg.guiding, current, lo, hi, g, rng))
    return SearchRegion(tuple(intervals))


def candidate_windows(p: SegmentProblem, incumbent: Window, dims: tuple[str, ...],
                      points: list) -> list[Window]:
    """Map sampled points to distinct valid windows, dropping the incumbent."""
    seen = {incumbent}
    out = []
    for pt in points:
        if len(dims) == 1:
            w = with_index(incumbent, dims[0], int(pt))
        else:
            w = clamp_candidate(pt[0], pt[1], p.N)
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def optimize(p: SegmentProblem, cfg: OptimizerConfig,
             max_idle_iterations: int = MAX_IDLE_ITERATIONS) -> RunTrace:
    rng = make_rng(cfg.seed)
    counter = EvaluationCounter(cfg.budget)
    best_w = random_window(p.N, rng)
    best_v = objective(p, best_w, counter)
    improvements = [Improvement(counter.used, best_v, best_w)]
    trace = RunTrace(improvements, 0, (best_w, best_v))

    iteration = idle = 0
    while counter.used < counter.budget:
        before = counter.used
        dims = select_dimensions(cfg.dimension_mode, iteration)
        iteration += 1
        gradient = None
        if cfg.guiding.uses_gradient:
            mark = counter.used
            try:
                gradient = estimate_gradient(p, best_w, dims, counter)
            except BudgetExhausted:
                trace.stencil_evaluations += counter.used - mark
                break
            trace.stencil_evaluations += gradient.evaluations_spent
        region = build_region(p, best_w, dims, cfg, gradient, rng)
        points = sample(cfg.sampling, region, rng)
        batch_w, batch_v, batch_at = None, np.inf, 0
        for w in candidate_windows(p, best_w, dims, points):
            try:
                v = objective(p, w, counter)
            except BudgetExhausted:
                break
            trace.candidate_evaluations += 1
            if v < batch_v:
                batch_w, batch_v, batch_at = w, v, counter.used
        if batch_v < best_v:
            best_w, best_v = batch_w, batch_v
            improvements.append(Improvement(batch_at, best_v, best_w))
        if counter.used == before:
            idle += 1
            if idle >= max_idle_iterations:
                trace.stalled = True
                break
        else:
            idle = 0

    trace.iterations = iteration
    trace.total_evaluations = counter.used
    trace.final_best = (best_w, best_v)
    return trace
