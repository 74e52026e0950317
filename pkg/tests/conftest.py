import pytest

from tilesense import base_catalog


@pytest.fixture(scope="session")
def catalog():
    return base_catalog()
