import json
import os

import pytest

from kds_spectra import geometry as geo

HERE = os.path.dirname(os.path.abspath(__file__))

with open(os.path.join(HERE, "oracles", "frozen.json")) as _fh:
    ORACLES = json.load(_fh)


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


@pytest.fixture
def sds():
    return geo.BlackHoleParams(0.0, 1.0, 10.0)


@pytest.fixture
def kds():
    return geo.BlackHoleParams(0.5, 1.0, 10.0)


# the trapped-orbit parameters found by the grid search at l = 1
TRAPPED = geo.BlackHoleParams(0.13, 0.195, 1.0)


@pytest.fixture
def trapped():
    return TRAPPED
