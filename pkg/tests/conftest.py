import pytest

from geoground.deduce import load_default_rules


@pytest.fixture(scope="session")
def rules():
    return load_default_rules()
