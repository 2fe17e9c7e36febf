import pytest

import zicount as zc


@pytest.fixture(scope="session")
def trajan():
    return zc.load_trajan()


@pytest.fixture(scope="session")
def trajan_cells(trajan):
    return zc.cell_summaries(trajan)
