import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def moduli():
    return (0.1, 0.36, 0.5, 0.75, 0.95)
