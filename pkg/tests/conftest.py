import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lyapspec.maps import RationalMap

settings.register_profile("lyapspec", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lyapspec")


@pytest.fixture(autouse=True)
def _quiet_runtime_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


@pytest.fixture
def z2():
    return RationalMap.quadratic(0)


@pytest.fixture
def cheb():
    return RationalMap.quadratic(-2)


@pytest.fixture
def cantor():
    return RationalMap.quadratic(-6)


LOG2, LOG4, LOG6 = np.log(2.0), np.log(4.0), np.log(6.0)
