import numpy as np
import pytest

from segopt.benchgen import ControlExpression, InstanceSpec, generate_instance


def small_spec(seed: int, N: int = 60, M: int = 10, name: str = "small") -> InstanceSpec:
    return InstanceSpec(name, ControlExpression(base=(2, 5), scale=(0.2, 4), divisor=20),
                        ControlExpression(base=(0.05, 0.2)), M=M, N=N, seed=seed)


@pytest.fixture
def small_problem():
    return generate_instance(small_spec(7))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
