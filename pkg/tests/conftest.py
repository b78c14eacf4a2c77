import pytest

from spraylab.evaluate import sample_points
from spraylab.presets import get_preset


@pytest.fixture(scope="session")
def samples2():
    return sample_points(2, 50)


@pytest.fixture(scope="session")
def samples3():
    return sample_points(3, 50)


@pytest.fixture(scope="session")
def flat2():
    return get_preset("flat2").build()


@pytest.fixture(scope="session")
def flat3():
    return get_preset("flat3").build()


@pytest.fixture(scope="session")
def anderson_thompson():
    return get_preset("anderson-thompson").build()


@pytest.fixture(scope="session")
def yang_05():
    return get_preset("yang(0.5)").build()


@pytest.fixture(scope="session")
def riemannian():
    return get_preset("riemannian").build()
