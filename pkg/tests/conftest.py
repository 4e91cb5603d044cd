import numpy as np
import pytest

from soapsched.dist import ContinuousSpec, DiscreteDist, MG1, pathological, quantize


@pytest.fixture
def d1() -> DiscreteDist:
    return DiscreteDist([1.0, 2.0], [0.5, 0.5])


@pytest.fixture
def point_mass() -> DiscreteDist:
    return DiscreteDist([1.0], [1.0])


@pytest.fixture
def path01() -> DiscreteDist:
    return pathological(0.1)


@pytest.fixture
def pareto2000() -> DiscreteDist:
    return quantize(ContinuousSpec("pareto", {"shape": 1.5, "scale": 1.0}, points=2000))


@pytest.fixture
def mg1_d1(d1) -> MG1:
    return MG1(d1, 0.4)


def random_dists(seed: int, count: int):
    """Seeded stream of small random discrete distributions."""
    from soapsched.verify import random_dist

    for i in range(count):
        yield random_dist(np.random.default_rng([seed, i]))
