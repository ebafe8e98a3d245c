import numpy as np
import pytest

from mbsp import (MultibandSupport, build_folded_system, build_scheme, design_window,
                  expanded_index_sets)

FIVE_BANDS = [(308.892, 60.4428), (596.276, 41.7585), (920.824, 39.9765),
              (1169.11, 66.6665), (1381.22, 19.1557)]
FINAL_MODULI = [11, 18, 19, 37, 49, 68, 69, 70, 71]


@pytest.fixture(scope="session")
def five_band():
    return MultibandSupport.from_dict(
        {"T": 1.0, "Bw": 9.12, "bands": [{"fc": f, "B": B} for f, B in FIVE_BANDS]})


@pytest.fixture(scope="session")
def five_sets(five_band):
    return expanded_index_sets(five_band)


@pytest.fixture(scope="session")
def final_scheme():
    return build_scheme(FINAL_MODULI)


@pytest.fixture(scope="session")
def final_system(final_scheme, five_sets):
    return build_folded_system(final_scheme, five_sets.union)


@pytest.fixture(scope="session")
def window_912():
    return design_window(9.12, 1.0, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
