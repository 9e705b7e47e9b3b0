import numpy as np
import pytest

from attacksearch.configspace import (AttackFamily, ConfigSpace, FamilyGrid,
                                      default_config_space)
from attacksearch.evaluation import make_baseline
from attacksearch.rngutil import Stream
from attacksearch.victims import LinearWorldModelVictim, surface_task


@pytest.fixture(scope="session")
def toy_space() -> ConfigSpace:
    """2 families x 3 eps x 2 steps x 2 allocations = 24 configs."""
    return ConfigSpace(grids={
        AttackFamily.APGD_CE: FamilyGrid(epsilons=(2, 8, 16), steps=(4, 10)),
        AttackFamily.FAB: FamilyGrid(epsilons=(2, 8, 16), steps=(4, 10)),
    })


@pytest.fixture(scope="session")
def default_space() -> ConfigSpace:
    return default_config_space()


@pytest.fixture(scope="session")
def surface_victim():
    return surface_task("task-fixture", 11)


@pytest.fixture(scope="session")
def noisy_surface_victim():
    return surface_task("task-noisy", 11, noise_scale=1.0)


@pytest.fixture(scope="session")
def linear_victim():
    return LinearWorldModelVictim("linear-fixture", horizon=8)


@pytest.fixture(scope="session")
def surface_baseline(surface_victim):
    return make_baseline(surface_victim, 3, Stream(0, (99,)).generator())


@pytest.fixture(scope="session")
def linear_baseline(linear_victim):
    return make_baseline(linear_victim, 3, Stream(0, (98,)).generator())


@pytest.fixture()
def rng() -> np.random.Generator:
    return Stream(1234).generator()
