"""Guiding strategies (where to look) and sampling strategies (what to evaluate).

A guiding strategy turns the incumbent index and, optionally, a gradient into
an inclusive integer interval. A region is one interval per optimized
dimension; samplers draw candidates from it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ENUMERATION_LIMIT = 1_000_000

GUIDING_MODES = ("full", "direction", "range")
SAMPLING_MODES = ("exhaustive", "random", "orthogonal")


class InfeasibleEnumeration(Exception):
    """Exhaustive sampling would produce more candidates than allowed."""


def round_half_away(x: float) -> int:
    """Round to the nearest integer, ties away from zero."""
    a = abs(x)
    n = math.floor(a)
    if a - n >= 0.5:
        n += 1
    return int(-n if x < 0 else n)


@dataclass(frozen=True)
class GuidingConfig:
    mode: str = "full"
    guided: bool = False
    step_size: float = 1.0
    search_width: int = 0

    def __post_init__(self) -> None:
        if self.mode not in GUIDING_MODES:
            raise ValueError(f"unknown guiding mode {self.mode!r}")
        if self.mode == "range" and not self.step_size > 0:
            raise ValueError("step_size must be > 0 for range guiding")
        if self.search_width < 0:
            raise ValueError("search_width must be >= 0")

    @property
    def uses_gradient(self) -> bool:
        return self.guided and self.mode != "full"


@dataclass(frozen=True)
class SamplingConfig:
    mode: str = "random"
    sample_size: int = 10

    def __post_init__(self) -> None:
        if self.mode not in SAMPLING_MODES:
            raise ValueError(f"unknown sampling mode {self.mode!r}")
        if self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")


@dataclass(frozen=True)
class SearchRegion:
    intervals: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if not self.intervals:
            raise ValueError("a region needs at least one dimension")
        for lo, hi in self.intervals:
            if lo > hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")

    @classmethod
    def of(cls, *intervals: Sequence[int]) -> "SearchRegion":
        return cls(tuple((int(lo), int(hi)) for lo, hi in intervals))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(hi - lo + 1 for lo, hi in self.intervals)

    @property
    def cardinality(self) -> int:
        return math.prod(self.sizes)

    def __contains__(self, point) -> bool:
        if len(self.intervals) == 1 and not isinstance(point, tuple):
            point = (point,)
        return all(lo <= x <= hi for x, (lo, hi) in zip(point, self.intervals))


# -- guiding -----------------------------------------------------------------

def region_full(lo: int, hi: int) -> tuple[int, int]:
    if lo > hi:
        raise ValueError("valid range is empty")
    return lo, hi


def _random_sign(rng: np.random.Generator) -> int:
    return 1 if rng.integers(2) else -1


def region_direction(current: int, lo: int, hi: int, gradient: float | None = None,
                     rng: np.random.Generator | None = None) -> tuple[int, int]:
    """One side of ``current``: guided by the gradient sign, or a random side."""
    if gradient is None:
        if rng is None:
            raise ValueError("random direction needs an rng")
        d = _random_sign(rng)
    else:
        d = -int(np.sign(gradient))
    if d > 0 and current + 1 <= hi:
        return current + 1, hi
    if d < 0 and lo <= current - 1:
        return lo, current - 1
    return current, current


def region_range(current: int, lo: int, hi: int, step_size: float, search_width: int,
                 gradient: float | None = None,
                 rng: np.random.Generator | None = None) -> tuple[int, int]:
    """Interval of half-width ``search_width`` around an integer gradient step."""
    if gradient is None:
        if rng is None:
            raise ValueError("random range needs an rng")
        sign = _random_sign(rng)
        u = 1.0 - rng.random()  # (0, 1]
        target = current + sign * round_half_away(step_size * u)
    else:
        target = current - round_half_away(step_size * gradient)
    a, b = max(target - search_width, lo), min(target + search_width, hi)
    if a > b:
        nearest = min(max(target, lo), hi)
        return nearest, nearest
    return a, b


def guide(cfg: GuidingConfig, current: int, lo: int, hi: int, gradient: float | None,
          rng: np.random.Generator) -> tuple[int, int]:
    """Dispatch to the configured guiding strategy for one dimension."""
    if cfg.mode == "full":
        return region_full(lo, hi)
    g = gradient if cfg.guided else None
    if cfg.guided and g is None:
        raise ValueError("guided strategy needs a gradient")
    if cfg.mode == "direction":
        return region_direction(current, lo, hi, gradient=g, rng=rng)
    return region_range(current, lo, hi, cfg.step_size, cfg.search_width, gradient=g, rng=rng)


# -- sampling ----------------------------------------------------------------

def _unwrap(points: list[tuple[int, ...]], ndim: int) -> list:
    return [p[0] for p in points] if ndim == 1 else points


def sample_exhaustive(region: SearchRegion, limit: int = ENUMERATION_LIMIT) -> list:
    if region.cardinality > limit:
        raise InfeasibleEnumeration(
            f"exhaustive sampling of {region.cardinality} candidates exceeds limit {limit}")
    axes = [range(lo, hi + 1) for lo, hi in region.intervals]
    return _unwrap(list(itertools.product(*axes)), len(axes))


def sample_random(region: SearchRegion, k: int, rng: np.random.Generator) -> list:
    """``min(k, |region|)`` distinct points, uniformly without replacement."""
    if k < 1:
        raise ValueError("sample size must be >= 1")
    total = region.cardinality
    flat = rng.choice(total, size=min(k, total), replace=False)
    coords = np.unravel_index(flat, region.sizes)
    los = [lo for lo, _ in region.intervals]
    points = [tuple(int(c[i]) + lo for c, lo in zip(coords, los)) for i in range(len(flat))]
    return _unwrap(points, len(los))


def orthogonal_points(lo: int, hi: int, k: int) -> list[int]:
    if lo == hi:
        return [lo]
    if k < 2:
        raise ValueError("orthogonal sampling needs k >= 2 to include both endpoints")
    out: list[int] = []
    for j in range(k):
        x = round_half_away(lo + j * (hi - lo) / (k - 1))
        if not out or x != out[-1]:
            out.append(x)
    return out


def sample_orthogonal(region: SearchRegion, k: int) -> list:
    axes = [orthogonal_points(lo, hi, k) for lo, hi in region.intervals]
    return _unwrap(list(itertools.product(*axes)), len(axes))


def sample(cfg: SamplingConfig, region: SearchRegion, rng: np.random.Generator) -> list:
    if cfg.mode == "exhaustive":
        return sample_exhaustive(region)
    if cfg.mode == "random":
        return sample_random(region, cfg.sample_size, rng)
    return sample_orthogonal(region, cfg.sample_size)
