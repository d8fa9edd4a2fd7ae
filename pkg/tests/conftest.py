import numpy as np
import pytest

from exstat._backend import HAVE_NUMBA

BACKENDS = [pytest.param(False, id="numpy")]
if HAVE_NUMBA:
    BACKENDS.insert(0, pytest.param(True, id="numba"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=BACKENDS)
def use_numba(request):
    return request.param


def random_config(rng, n, scale=1.0):
    return scale * (rng.normal(size=n) + 1j * rng.normal(size=n))
