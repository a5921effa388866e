"""Seeded synthetic benchmark instances.

Every row draws its own control parameters once; each index ``t`` then gets an
independent normal draw with mean ``m(t)`` and standard deviation ``s(t)``.
Random numbers come from numpy's Philox counter-based bit generator, and
normal variates from ``Generator.standard_normal`` (ziggurat), so a seed
yields the same dataset on every platform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Aggregation, SegmentProblem, VectorDataset, window_count, window_from_index

SHAPES = ("linear", "zigzag", "sine")


def _shape(kind: str, t: np.ndarray, period: float) -> np.ndarray:
    if kind == "linear":
        return t
    if kind == "zigzag":
        # slope alternates between +1 and -1 every half period
        phase = np.mod(t, period)
        return period / 2 - np.abs(phase - period / 2)
    if kind == "sine":
        return period / (2 * math.pi) * np.sin(2 * math.pi * t / period)
    raise ValueError(f"unknown shape {kind!r}")


@dataclass(frozen=True)
class ControlExpression:
    """``c(t) = base + scale / divisor * shape(t)`` with base and scale uniform per row."""

    base: tuple[float, float]
    scale: tuple[float, float] = (0.0, 0.0)
    divisor: float = 1.0
    shape: str = "linear"
    period: float = 200.0

    def __post_init__(self) -> None:
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        for lo, hi in (self.base, self.scale):
            if lo > hi:
                raise ValueError(f"bad uniform range ({lo}, {hi})")
        if self.divisor <= 0 or self.period <= 0:
            raise ValueError("divisor and period must be positive")

    @property
    def non_negative(self) -> bool:
        return self.base[0] >= 0 and self.scale[0] >= 0 and self.shape != "sine"

    def draw(self, rng: np.random.Generator) -> tuple[float, float]:
        return float(rng.uniform(*self.base)), float(rng.uniform(*self.scale))

    def evaluate(self, params: tuple[float, float], t: np.ndarray) -> np.ndarray:
        base, scale = params
        return base + scale / self.divisor * _shape(self.shape, t, self.period)


@dataclass(frozen=True)
class InstanceSpec:
    name: str
    mean_control: ControlExpression
    sd_control: ControlExpression
    M: int = 20
    N: int = 1000
    min_width_fraction: float = 0.05
    aggregation: str = "mean"
    seed: int = 0
    definition: str = "artifact-defined"
    description: str = ""

    def __post_init__(self) -> None:
        if self.M < 1 or self.N < 2:
            raise ValueError("need M >= 1 and N >= 2")
        if not self.sd_control.non_negative:
            raise ValueError("sd_control must be non-negative by construction")
        if not 0 <= self.min_width_fraction <= 1:
            raise ValueError("min_width_fraction must lie in [0, 1]")
        Aggregation(self.aggregation)

    @property
    def min_width(self) -> int:
        return max(1, math.ceil(self.min_width_fraction * self.N))


def generate_instance(spec: InstanceSpec) -> SegmentProblem:
    rng = np.random.Generator(np.random.Philox(spec.seed & 0xFFFFFFFFFFFFFFFF))
    t = np.arange(spec.N, dtype=np.float64)
    rows = np.empty((spec.M, spec.N))
    for i in range(spec.M):
        m_params = spec.mean_control.draw(rng)
        s_params = spec.sd_control.draw(rng)
        m = spec.mean_control.evaluate(m_params, t)
        s = spec.sd_control.evaluate(s_params, t)
        rows[i] = m + s * rng.standard_normal(spec.N)
    k = int(rng.integers(window_count(spec.N, spec.min_width)))
    reference = window_from_index(k, spec.N, spec.min_width)
    return SegmentProblem(
        VectorDataset(rows), Aggregation(spec.aggregation), reference,
        name=spec.name, generator_seed=spec.seed,
        metadata={"definition": spec.definition, "min_width": spec.min_width},
    )


def builtin_suite(seed: int = 0, M: int = 20, N: int = 1000) -> list[InstanceSpec]:
    """Six instances x1..x6; only x6 follows a published formula."""
    flat_noise = ControlExpression(base=(0.5, 1.0))
    common = dict(M=M, N=N)
    specs = [
        InstanceSpec("x1", ControlExpression(base=(2, 5)), flat_noise,
                     description="constant mean, constant noise", **common),
        InstanceSpec("x2", ControlExpression(base=(2, 5), scale=(0.2, 4), divisor=80), flat_noise,
                     description="increasing mean, constant noise", **common),
        InstanceSpec("x3", ControlExpression(base=(2, 5), scale=(0.2, 4), divisor=20,
                                             shape="zigzag", period=250), flat_noise,
                     description="piecewise slopes, constant noise", **common),
        InstanceSpec("x4", ControlExpression(base=(2, 5)),
                     ControlExpression(base=(0, 0.001), scale=(0.002, 0.01)),
                     description="constant mean, increasing noise", **common),
        InstanceSpec("x5", ControlExpression(base=(2, 5), scale=(0.2, 4), divisor=20,
                                             shape="sine", period=300),
                     ControlExpression(base=(0.2, 0.5)),
                     description="varying slope, moderate noise", **common),
        InstanceSpec("x6", ControlExpression(base=(2, 5), scale=(0.2, 4), divisor=80),
                     ControlExpression(base=(0, 0.001), scale=(0.002, 0.01)),
                     definition="published", description="increasing mean, increasing noise",
                     **common),
    ]
    return [_reseed(s, seed) for s in specs]


def _reseed(spec: InstanceSpec, seed: int) -> InstanceSpec:
    # distinct but stable stream per instance name
    offset = sum((i + 1) * ord(c) for i, c in enumerate(spec.name))
    return InstanceSpec(**{**spec.__dict__, "seed": (seed * 1_000_003 + offset) & 0xFFFFFFFFFFFFFFFF})


def spec_from_dict(d: dict) -> InstanceSpec:
    """Build a spec from a mapping such as a parsed YAML document."""
    d = dict(d)
    for key in ("mean_control", "sd_control"):
        ctl = dict(d[key])
        for rng_key in ("base", "scale"):
            if rng_key in ctl:
                ctl[rng_key] = tuple(float(x) for x in ctl[rng_key])
        d[key] = ControlExpression(**ctl)
    return InstanceSpec(**d)


def load_spec(path) -> InstanceSpec:
    import yaml
    from pathlib import Path

    data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"{path}: instance spec must be a mapping")
    return spec_from_dict(data)
