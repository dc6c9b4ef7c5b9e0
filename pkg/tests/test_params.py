import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from deltaion.params import CuspWarning, ModelParams


@pytest.mark.parametrize("alpha,omega", [(-0.1, 1.0), (0.5, 0.0), (0.5, -2.0), (math.nan, 1.0),
                                         (0.5, math.inf)])
def test_invalid_parameters(alpha, omega):
    with pytest.raises(ValueError):
        ModelParams(alpha, omega)


@pytest.mark.filterwarnings("ignore::deltaion.params.CuspWarning")
@given(st.floats(0.05, 5.0))
def test_minimal_photon_number(omega):
    p = ModelParams(0.1, omega)
    assert p.m * omega > 1 >= (p.m - 1) * omega


def test_cusp_flag():
    with pytest.warns(CuspWarning):
        p = ModelParams(0.5, 0.5)
    assert p.near_cusp
    assert not ModelParams(0.5, 0.51).near_cusp


def test_period():
    assert ModelParams(0.5, 1.51).period == pytest.approx(2 * math.pi / 1.51)
