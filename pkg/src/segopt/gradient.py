"""Five-point finite-difference partials of the objective w.r.t. window indices."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .core import EvaluationCounter, SegmentProblem, Window, objective

START = "start"
END = "end"
DIMENSIONS = (START, END)

# offsets and weights of the h=1 stencil; the centre point has weight 0
STENCIL = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))


@dataclass(frozen=True)
class GradientEstimate:
    d_start: float
    d_end: float
    evaluations_spent: int

    def get(self, dim: str) -> float:
        return self.d_start if dim == START else self.d_end


def dimension_bounds(w: Window, dim: str, n: int) -> tuple[int, int]:
    """Valid range for one index while the other stays fixed."""
    if dim == START:
        return 0, w.end
    if dim == END:
        return w.start, n - 1
    raise ValueError(f"unknown dimension {dim!r}")


def with_index(w: Window, dim: str, k: int) -> Window:
    return Window(k, w.end) if dim == START else Window(w.start, k)


def five_point(g: Callable[[int], float], x: int, lo: int, hi: int) -> tuple[float, int]:
    """Stencil derivative of ``g`` at ``x`` with points clamped into ``[lo, hi]``.

    Returns the estimate and the number of distinct calls made to ``g``.
    """
    cache: dict[int, float] = {}
    total = 0.0
    for offset, weight in STENCIL:
        k = min(max(x + offset, lo), hi)
        if k not in cache:
            cache[k] = g(k)
        total += weight * cache[k]
    return total / 12.0, len(cache)


def stencil_derivative(p: SegmentProblem, w: Window, dim: str,
                       counter: EvaluationCounter) -> float:
    lo, hi = dimension_bounds(w, dim, p.N)
    x = w.start if dim == START else w.end
    value, _ = five_point(lambda k: objective(p, with_index(w, dim, k), counter), x, lo, hi)
    return value


def estimate_gradient(p: SegmentProblem, w: Window, dims: Iterable[str],
                      counter: EvaluationCounter) -> GradientEstimate:
    dims = tuple(dims)
    if not dims:
        raise ValueError("dims must be non-empty")
    before = counter.used
    parts = {START: 0.0, END: 0.0}
    for dim in dims:
        parts[dim] = stencil_derivative(p, w, dim, counter)
    return GradientEstimate(parts[START], parts[END], counter.used - before)
