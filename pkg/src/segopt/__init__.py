"""Integer window optimization for windowed aggregations over vector data."""
from .core import (Aggregation, BudgetExhausted, EvaluationCounter, SegmentProblem, VectorDataset,
                   Window, aggregate, brute_force_optimum, objective, read_instance, slice_window,
                   write_instance)
from .optimizer import OptimizerConfig, RunTrace, optimize
from .strategies import GuidingConfig, SamplingConfig

__version__ = "0.1.0"

__all__ = [
    "Aggregation", "BudgetExhausted", "EvaluationCounter", "GuidingConfig", "OptimizerConfig",
    "RunTrace", "SamplingConfig", "SegmentProblem", "VectorDataset", "Window", "aggregate",
    "brute_force_optimum", "objective", "optimize", "read_instance", "slice_window",
    "write_instance",
]
