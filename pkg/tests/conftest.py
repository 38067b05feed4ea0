import pytest


@pytest.fixture(scope="session")
def acc_cache():
    """Shared cache so acceptance criteria reuse sweeps and tables."""
    return {}
