import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rfwave.grid import Grid, GridFunction
from rfwave.operator import (
    QuadratureConstants, RieszFellerParams, apply_singular, apply_spectral, apply_spectral_step,
    calibrate_constants, closed_form_constants, symbol,
)

from conftest import gaussian

admissible = st.floats(1.01, 2.0).flatmap(
    lambda a: st.tuples(st.just(a), st.floats(-min(a, 2 - a), min(a, 2 - a))))


# ---------------------------------------------------------------- params and symbol

@pytest.mark.parametrize("alpha,theta", [(0.0, 0.0), (2.5, 0.0), (1.5, 0.6), (0.5, -0.6), (np.nan, 0.0)])
def test_params_reject_inadmissible(alpha, theta):
    with pytest.raises(ValueError):
        RieszFellerParams(alpha, theta)


def test_evolution_needs_alpha_above_one():
    with pytest.raises(ValueError):
        RieszFellerParams(0.8, 0.1).require_evolution()
    assert RieszFellerParams(1.2, 0.1).require_evolution().alpha == 1.2


def test_symbol_laplacian():
    assert symbol(RieszFellerParams(2.0, 0.0), 3.0) == pytest.approx(-9.0 + 0.0j, abs=1e-15)


@given(admissible)
def test_symbol_vanishes_at_zero(p):
    assert symbol(RieszFellerParams(*p), 0.0) == 0.0


def test_symbol_skewed_value():
    z = symbol(RieszFellerParams(1.5, 0.5), 1.0)
    assert z.real == pytest.approx(-math.cos(math.pi / 4), abs=1e-15)
    assert z.imag == pytest.approx(-math.sin(math.pi / 4), abs=1e-15)


@given(admissible, st.floats(-50, 50))
def test_symbol_conjugate_symmetry(p, k):
    params = RieszFellerParams(*p)
    assert symbol(params, -k) == pytest.approx(np.conj(symbol(params, k)), rel=1e-14, abs=1e-300)


@given(admissible, st.floats(-50, 50).filter(lambda k: abs(k) > 1e-6))
def test_symbol_dissipative(p, k):
    params = RieszFellerParams(*p)
    z = symbol(params, k)
    assert z.real == pytest.approx(-abs(k) ** params.alpha * params.cos_factor, rel=1e-14)
    assert z.real < 0


# ---------------------------------------------------------------- spectral form

def test_apply_spectral_single_mode():
    g = Grid(10.0, 256)
    x = np.asarray(g.x)
    f = GridFunction(g, np.sin(np.pi * x / 10))
    out = apply_spectral(RieszFellerParams(2.0, 0.0), f).values
    assert np.max(np.abs(out + (np.pi / 10) ** 2 * np.sin(np.pi * x / 10))) < 1e-12


@given(admissible)
def test_apply_spectral_zero(p):
    g = Grid(10.0, 64)
    assert not np.any(apply_spectral(RieszFellerParams(*p), GridFunction(g, np.zeros(64))).values)


@given(admissible, st.floats(-3, 3), st.floats(-3, 3))
def test_apply_spectral_linear(p, a, b):
    params = RieszFellerParams(*p)
    g = Grid(20.0, 256)
    f = g.sample(lambda x: gaussian(x, 1.5))
    h = g.sample(lambda x: np.sin(x) * gaussian(x, 3.0))
    lhs = apply_spectral(params, f * a + h * b).values
    rhs = apply_spectral(params, f).values * a + apply_spectral(params, h).values * b
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * (1 + abs(a) + abs(b))


def test_laplacian_limit_second_order():
    errs = []
    for N in (128, 256, 512):
        g = Grid(20.0, N)
        f = g.sample(lambda x: gaussian(x, 2.0))
        ref = apply_spectral(RieszFellerParams(2.0, 0.0), f).values
        v = f.values
        fd = (np.roll(v, -1) - 2 * v + np.roll(v, 1)) / g.dx**2
        errs.append(np.max(np.abs(ref - fd)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 2) < 0.05)


def test_step_form_equals_periodic_form_for_compatible_field():
    g = Grid(20.0, 512)
    params = RieszFellerParams(1.5, 0.3)
    f = g.sample(gaussian)
    a = apply_spectral(params, f).values
    b = apply_spectral_step(params, f, 0.0, 0.0).values
    assert np.max(np.abs(a - b)) < 1e-13


# ---------------------------------------------------------------- calibration

def test_calibration_symmetric(consts_sym):
    assert consts_sym.c1 == consts_sym.c2 > 0
    assert consts_sym.residual < 1e-5


def test_calibration_one_sided_boundary():
    c = calibrate_constants(RieszFellerParams(1.5, 0.5))
    assert c.c2 == pytest.approx(0.0, abs=1e-5 * c.c1)


@pytest.mark.parametrize("alpha", [1.25, 1.5, 1.75])
@pytest.mark.parametrize("frac", [-1.0, -0.5, 0.0, 0.5, 1.0])
def test_calibration_matches_closed_form(alpha, frac):
    """NNLS calibration against the spectral form reproduces the analytic weights."""
    params = RieszFellerParams(alpha, frac * (2 - alpha))
    c = calibrate_constants(params)
    c1, c2 = closed_form_constants(params)
    scale = c1 + c2
    assert abs(c.c1 - c1) < 1e-6 * scale
    assert abs(c.c2 - c2) < 1e-6 * scale


def test_calibration_needs_fractional_order():
    with pytest.raises(ValueError):
        calibrate_constants(RieszFellerParams(2.0, 0.0))


def test_calibration_raises_when_tolerance_missed():
    with pytest.raises(RuntimeError):
        calibrate_constants(RieszFellerParams(1.5, 0.3), tol=1e-14)


def test_quadrature_constants_validation():
    with pytest.raises(ValueError):
        QuadratureConstants(-1.0, 1.0, 100.0, 0.1)
    with pytest.raises(ValueError):
        QuadratureConstants(1.0, 1.0, 0.05, 0.1)


# ---------------------------------------------------------------- singular form

@given(st.floats(-5, 5))
def test_singular_constant_is_zero(c):
    params = RieszFellerParams(1.5, 0.3)
    consts = QuadratureConstants(0.3, 0.2, 400.0, 6 * 80 / 1024)
    g = Grid(40.0, 1024)
    out = apply_singular(params, consts, GridFunction(g, np.full(1024, c)), c, c).values
    assert np.max(np.abs(out)) < 1e-12 * (1 + abs(c))


def test_singular_requires_limits(consts_skew):
    g = Grid(40.0, 512)
    with pytest.raises(ValueError):
        apply_singular(RieszFellerParams(1.5, 0.3), consts_skew, g.sample(gaussian))


def test_singular_requires_fractional_order(consts_skew):
    g = Grid(40.0, 512)
    with pytest.raises(ValueError):
        apply_singular(RieszFellerParams(2.0, 0.0), consts_skew, g.sample(gaussian), 0.0, 0.0)


def test_singular_matches_spectral_on_gaussian(consts_skew):
    params = RieszFellerParams(1.5, 0.3)
    g = Grid(40.0, 4096)
    f = g.sample(gaussian)
    sing = apply_singular(params, consts_skew, f, 0.0, 0.0).values
    ref = apply_spectral(params, f, pad=32).values
    assert np.max(np.abs(sing - ref)) / np.max(np.abs(ref)) < 1e-4


@pytest.mark.parametrize("theta", [0.0, 0.3])
def test_singular_matches_spectral_on_tanh(theta):
    """A step field: the spectral side subtracts the ramp joining the limits."""
    params = RieszFellerParams(1.5, theta)
    consts = calibrate_constants(params)
    g = Grid(40.0, 4096)
    f = g.sample(np.tanh)
    sing = apply_singular(params, consts, f, -1.0, 1.0).values
    ref = apply_spectral_step(params, f, -1.0, 1.0, pad=32).values
    scale = np.max(np.abs(ref))
    mid = g.N // 2
    assert g.x[mid] == 0.0
    assert abs(sing[mid] - ref[mid]) < 1e-4 * scale
    assert np.max(np.abs(sing - ref)) < 1e-4 * scale
