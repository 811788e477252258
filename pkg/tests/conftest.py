import pytest
from hypothesis import settings

settings.register_profile("epflow", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("epflow")


@pytest.fixture(scope="session")
def blob():
    from epflow.kernels import shape_by_name
    return shape_by_name("blob", 1.0)


@pytest.fixture(scope="session")
def alpha():
    from epflow.kernels import shape_by_name
    return shape_by_name("alpha", 1.0)
