import pytest

from thermodiff.units import derive_scales, make_params


@pytest.fixture
def unit_scales():
    return derive_scales(make_params("natural", 1.0, 1.0))


@pytest.fixture
def electron_params():
    return make_params("si", 300.0, 9.1093837e-31)
