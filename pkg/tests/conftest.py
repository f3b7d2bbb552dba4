import numpy as np
import pytest

from cavity_echo import decay_rate, make_comb, reference_ensemble


@pytest.fixture(scope="session")
def ref_ensemble():
    """Comb with N=400, W=100 and gamma = 1."""
    ens = reference_ensemble()
    assert decay_rate(ens) == pytest.approx(1.0)
    return ens


@pytest.fixture
def small_comb():
    return make_comb(6, 4.0, 0.3 + 0.1j)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

