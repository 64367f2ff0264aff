import numpy as np
import pytest

from tripsolve.instance import TripInstance, validate
from tripsolve.oracle import gen_random


@pytest.fixture
def derived3() -> TripInstance:
    """Three-interval instance whose optimum (1, 0, 1) with cost -1.0 was
    frozen from exhaustive enumeration of all 2^3 step vectors."""
    return validate(
        {
            "n": 3,
            "alpha": 0.5,
            "delta": 2,
            "xi": [0, 1],
            "x": [0, 0, 0],
            "gamma": [1, 1, 1],
            "c": [-1.0, 2.0, -1.0],
        }
    )


@pytest.fixture
def two_interval() -> TripInstance:
    """Two intervals, two values, budget 2: the smallest instance with a
    nontrivial graph."""
    return validate(
        {
            "n": 2,
            "alpha": 1.0,
            "delta": 2,
            "xi": [0, 1],
            "x": [0, 0],
            "gamma": [1, 1],
            "c": [0.5, 0.25],
        }
    )


def small_corpus(count: int, start_seed: int = 0) -> list[TripInstance]:
    """Reproducible mix of small instances for cross-validation."""
    out = []
    rng = np.random.default_rng(start_seed + 987)
    for k in range(count):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 5))
        delta = int(rng.integers(0, 7))
        alpha = float(rng.choice([0.0, 0.1, 0.5, 1.0, 3.0]))
        out.append(gen_random(n, m, delta, alpha, seed=start_seed + k))
    return out


@pytest.fixture(scope="session")
def corpus200() -> list[TripInstance]:
    return small_corpus(200)
