import numpy as np
import pytest

from hardytime.grid import GridFunction, HalfLineFunction, make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_full(spec, rng):
    vals = rng.normal(size=spec.n_points) + 1j * rng.normal(size=spec.n_points)
    return GridFunction(spec, vals)


def random_half(spec, rng):
    vals = rng.normal(size=spec.n_half) + 1j * rng.normal(size=spec.n_half)
    return HalfLineFunction(spec, vals)


@pytest.fixture(scope="session")
def grid_1024():
    return make_grid(1024, 100.0)


@pytest.fixture(scope="session")
def grid_4096_200():
    return make_grid(4096, 200.0)
