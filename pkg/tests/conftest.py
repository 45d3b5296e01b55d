import functools

import numpy as np
import pytest

from conslab.grid import make_grid


@functools.lru_cache(maxsize=None)
def get_grid(n, domain="disk_mask"):
    """Shared grids so the factorization caches persist across tests."""
    return make_grid(n, domain)


@pytest.fixture
def disk17():
    return get_grid(17)


@pytest.fixture
def disk33():
    return get_grid(33)


@pytest.fixture
def square17():
    return get_grid(17, "square")


@pytest.fixture
def square33():
    return get_grid(33, "square")


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def binade_field(grid, rng):
    """Random nodal values in [1, 2): all first differences are exact in
    floating point, so the mixed-difference cancellations are bitwise."""
    from conslab.fields import ScalarField
    vals = 1.0 + rng.random((grid.n, grid.n))
    return ScalarField(grid, np.where(grid.in_domain, vals, 0.0))
