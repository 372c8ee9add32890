import pytest

from helpers import write_corpus


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """One year of synthetic hourly CSVs, shared across the session."""
    return write_corpus(tmp_path_factory.mktemp("corpus"))
