import pytest

from boxwing_doe import load_published_model, load_space


@pytest.fixture(scope="session")
def prp300():
    return load_space("prp300")


@pytest.fixture(scope="session")
def prosib():
    return load_space("prosib40")


@pytest.fixture(scope="session")
def front_stress():
    return load_published_model("prp300.sigma_front")
