import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rfwave.grid import (
    Grid, GridFunction, SpectralField, dealias_mask, ramp, spectral_derivative, spectral_eval,
    spectral_shift,
)


def test_grid_geometry():
    g = Grid(40.0, 4096)
    assert g.dx == pytest.approx(80 / 4096)
    assert g.x[0] == -40.0
    assert g.x[-1] == pytest.approx(40 - g.dx)
    assert g.k_half[-1] == pytest.approx(np.pi / g.dx)


@pytest.mark.parametrize("L,N", [(0.0, 64), (-1.0, 64), (10.0, 63), (10.0, 0)])
def test_grid_rejects_bad_sizes(L, N):
    with pytest.raises(ValueError):
        Grid(L, N)


def test_grid_function_validation():
    g = Grid(5.0, 16)
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(15))
    with pytest.raises(ValueError):
        GridFunction(g, np.full(16, np.nan))
    f = GridFunction(g, np.ones(16))
    with pytest.raises(ValueError):
        f.values[0] = 2.0
    assert (f + f).values[0] == 2.0
    assert (f * 3.0).integral() == pytest.approx(30.0)


def test_spectrum_round_trip_and_hermitian():
    g = Grid(10.0, 128)
    f = g.sample(lambda x: np.exp(-x**2) * np.cos(3 * x))
    fhat = f.spectrum()
    assert isinstance(fhat, SpectralField)
    assert fhat.is_hermitian()
    assert np.max(np.abs(fhat.to_grid_function().values - f.values)) < 1e-14


def test_ramp_endpoints():
    g = Grid(4.0, 32)
    r = ramp(g, 1.0, 0.0)
    assert r[0] == 1.0
    assert r[-1] == pytest.approx(g.dx / 8.0)


def test_spectral_derivative_of_mode():
    g = Grid(np.pi, 64)
    x = np.asarray(g.x)
    assert np.max(np.abs(spectral_derivative(np.sin(3 * x), g) - 3 * np.cos(3 * x))) < 1e-12
    assert np.max(np.abs(spectral_derivative(np.sin(3 * x), g, 2) + 9 * np.sin(3 * x))) < 1e-11


def test_dealias_mask_two_thirds():
    m = dealias_mask(Grid(1.0, 96))
    assert m.sum() == 32


@given(st.floats(-5, 5))
def test_spectral_shift_and_eval_agree(a):
    g = Grid(20.0, 256)
    v = g.sample(lambda x: np.exp(-x**2 / 4)).values
    shifted = spectral_shift(v, g, a)
    assert np.max(np.abs(shifted - np.exp(-(np.asarray(g.x) + a) ** 2 / 4))) < 1e-12
    assert spectral_eval(v, g, a) == pytest.approx(np.exp(-a * a / 4), abs=1e-12)
