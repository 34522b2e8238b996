import numpy as np
import pytest

from splinesurvey import Population


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def small_population(rng):
    N = 2000
    z = rng.lognormal(7.3, 0.5, N)
    y = z + 7.0 * np.sqrt(z) * rng.standard_normal(N)
    x = z + 3.0 * np.sqrt(z) * rng.standard_normal(N)
    return Population(ids=tuple(map(str, range(N))), z=z,
                      variables={"y": y, "x": x})


@pytest.fixture
def stratified_population(rng):
    N = 600
    z = rng.lognormal(7.0, 0.4, N)
    y = z + 5.0 * np.sqrt(z) * rng.standard_normal(N)
    strata = tuple("abc"[i % 3] for i in range(N))
    return Population(ids=tuple(map(str, range(N))), z=z,
                      variables={"y": y}, strata=strata)
