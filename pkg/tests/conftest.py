import numpy as np
import pytest

from qri import example1, full_eig, wave2d


@pytest.fixture(scope="session")
def p_example1():
    return example1()


@pytest.fixture(scope="session")
def oracle_example1(p_example1):
    return full_eig(p_example1, 0.9)


@pytest.fixture(scope="session")
def p_wave2d6():
    return wave2d(6)


@pytest.fixture(scope="session")
def p_wave2d4():
    return wave2d(4)


@pytest.fixture(scope="session")
def oracle_wave2d4_probe(p_wave2d4):
    # generic probe shift, far from the spectrum, for spectrum discovery
    return full_eig(p_wave2d4, 0.1234 + 0.4321j)


def rand_complex(rng, n):
    return rng.uniform(-1.0, 1.0, n) + 1j * rng.uniform(-1.0, 1.0, n)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
