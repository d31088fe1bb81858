import math

import numpy as np
import pytest
from hypothesis import settings

from repfusion.cost_model import (
    Affine,
    CostSpec,
    Exponential,
    Linear,
    LinearMinusOne,
    LogConcave,
    Polynomial,
    Power,
)

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")

acceptance_key = pytest.StashKey[list]()


@pytest.fixture
def example_cost():
    return CostSpec(7.0, Exponential(1.0, 1.0))


@pytest.fixture
def example_fusion():
    return LinearMinusOne(1.0)


@pytest.fixture
def criterion(request):
    """Record one acceptance line; printed in the terminal summary."""
    lines = request.config.stash.setdefault(acceptance_key, [])

    def record(label: str, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'} {label}: {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(acceptance_key, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# Random model generators shared by property and acceptance tests
# ---------------------------------------------------------------------------


def random_fusion(rng: np.random.Generator):
    k = rng.integers(3)
    if k == 0:
        return LinearMinusOne(float(rng.uniform(0.0, 5.0)))
    if k == 1:
        return Polynomial((float(rng.uniform(0.05, 2.0)), float(rng.uniform(0.0, 1.0))))
    return Affine(float(rng.uniform(0.0, 2.0)), float(rng.uniform(0.1, 3.0)))


def random_convex_cost(rng: np.random.Generator) -> CostSpec:
    c_min = float(rng.uniform(0.0, 10.0))
    if rng.integers(2) == 0:
        form = Exponential(float(rng.uniform(0.1, 5.0)), float(rng.uniform(0.1, 3.0)))
    else:
        form = Power(float(rng.uniform(0.1, 5.0)), float(rng.uniform(1.1, 4.0)))
    return CostSpec(c_min, form)


def random_linear_cost(rng: np.random.Generator) -> CostSpec:
    return CostSpec(float(rng.uniform(0.01, 10.0)), Linear(float(rng.uniform(0.1, 5.0))))


def random_concave_cost(rng: np.random.Generator) -> CostSpec:
    c_min = float(rng.uniform(0.0, 10.0))
    if rng.integers(2) == 0:
        form = LogConcave(float(rng.uniform(0.1, 5.0)), float(rng.uniform(0.1, 3.0)))
    else:
        form = Power(float(rng.uniform(0.1, 5.0)), float(rng.uniform(0.1, 0.95)))
    return CostSpec(c_min, form)


def log_uniform(rng: np.random.Generator, lo: float, hi: float, size=None):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))
