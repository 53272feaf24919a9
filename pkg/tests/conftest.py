import pytest

from weibullcv import plasma_cell_myeloma


@pytest.fixture
def real_sample():
    return plasma_cell_myeloma()
