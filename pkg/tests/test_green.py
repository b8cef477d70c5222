import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rfwave.green import (
    DEFAULT_GRID, UnderResolvedWarning, admissible_thetas, build_green, derivative_l1_scaled,
    derivative_smoothing_constant, green_property_suite, kernel_lp_norm, lp_decay_exponent,
    self_similarity_residual, semigroup_apply,
)
from rfwave.grid import Grid
from rfwave.operator import RieszFellerParams

HEAT = RieszFellerParams(2.0, 0.0)


def test_heat_kernel_closed_form():
    ker = build_green(HEAT, DEFAULT_GRID, 1.0)
    x = np.asarray(DEFAULT_GRID.x)
    exact = np.exp(-x**2 / 4) / math.sqrt(4 * math.pi)
    assert np.max(np.abs(ker.values.values - exact)) < 1e-8
    assert ker.values.values[DEFAULT_GRID.N // 2] == pytest.approx(0.282095, abs=1e-6)


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_heat_kernel_mass(t):
    ker = build_green(HEAT, DEFAULT_GRID, t)
    assert abs(ker.mass - 1) < 1e-6
    assert not ker.under_resolved


def test_symmetric_kernel_is_even():
    v = build_green(RieszFellerParams(1.5, 0.0), DEFAULT_GRID, 1.0).values.values
    # x_i = -L + i dx, so x -> -x maps index i to N - i
    assert np.max(np.abs(v[1:] - v[1:][::-1])) < 1e-15 * np.max(v) * 10


def test_tail_mass_small_on_default_grid():
    ker = build_green(RieszFellerParams(1.5, 0.0), DEFAULT_GRID, 1.0)
    assert 0 <= ker.tail_mass < 1e-2


def test_under_resolved_grid_warns_and_flags():
    with pytest.warns(UnderResolvedWarning):
        ker = build_green(HEAT, Grid(40.0, 64), 0.1)
    assert ker.under_resolved
    assert ker.mass == pytest.approx(1.116, abs=1e-3)
    assert any("mass" in d for d in ker.diagnostics)


def test_build_green_rejects_bad_input():
    with pytest.raises(ValueError):
        build_green(HEAT, DEFAULT_GRID, 0.0)
    with pytest.raises(ValueError):
        build_green(RieszFellerParams(0.8, 0.0), DEFAULT_GRID, 1.0)


def test_semigroup_identity_at_zero():
    f = DEFAULT_GRID.sample(lambda x: np.exp(-x**2) * (1 + np.sin(3 * x)))
    assert semigroup_apply(RieszFellerParams(1.5, 0.3), 0.0, f) is f


def test_semigroup_gaussian_variance():
    f = DEFAULT_GRID.sample(lambda x: np.exp(-x**2 / 2))
    out = semigroup_apply(HEAT, 1.0, f).values
    x = np.asarray(DEFAULT_GRID.x)
    assert np.max(np.abs(out - np.exp(-x**2 / 6) / math.sqrt(3))) < 1e-12


@given(st.sampled_from([1.25, 1.5, 1.75, 2.0]).flatmap(
    lambda a: st.tuples(st.just(a), st.sampled_from(admissible_thetas(a)))),
    st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_semigroup_composition(p, s1, s2):
    params = RieszFellerParams(*p)
    g = Grid(40.0, 1024)
    f = g.sample(lambda x: np.exp(-(x - 1) ** 2) * (1 + 0.3 * np.sin(x)))
    lhs = semigroup_apply(params, s1, semigroup_apply(params, s2, f)).values
    rhs = semigroup_apply(params, s1 + s2, f).values
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_self_similarity():
    assert self_similarity_residual(HEAT, DEFAULT_GRID, 1.0) == 0.0
    assert self_similarity_residual(HEAT, DEFAULT_GRID, 4.0) < 1e-6
    assert self_similarity_residual(RieszFellerParams(1.5, 0.3), DEFAULT_GRID, 2.0) < 1e-5


TIMES = tuple(np.geomspace(1.0, 100.0, 12))


def test_lp_decay_exponents():
    assert abs(lp_decay_exponent(HEAT, 1, TIMES)) < 1e-6
    assert lp_decay_exponent(HEAT, 2, TIMES) == pytest.approx(-0.25, abs=0.005)
    assert lp_decay_exponent(RieszFellerParams(1.5, 0.0), 2, TIMES) == pytest.approx(-1 / 3, rel=0.02)


def test_kernel_l2_norm_closed_form():
    # ||G(t)||_2^2 = (8 pi t)^(-1/2) for the heat kernel
    assert kernel_lp_norm(HEAT, 2.0, 2) == pytest.approx((16 * math.pi) ** -0.25, rel=1e-10)


def test_derivative_constants():
    assert derivative_smoothing_constant(RieszFellerParams(1.5, 0.3), 2, 2) == 1.0
    assert derivative_smoothing_constant(HEAT, 1, 0) == pytest.approx((2 * math.e) ** -0.5, rel=1e-12)
    assert derivative_smoothing_constant(HEAT, 1, 0) == pytest.approx(0.42888, abs=1e-5)
    # a fine grid approaches the continuum supremum from below
    on_grid = derivative_smoothing_constant(HEAT, 1, 0, 1.0, DEFAULT_GRID)
    assert on_grid == pytest.approx((2 * math.e) ** -0.5, rel=1e-3)
    assert on_grid <= (2 * math.e) ** -0.5


@given(st.sampled_from([1.25, 1.5, 2.0]), st.integers(0, 3), st.integers(0, 3), st.floats(0.1, 50))
def test_derivative_constant_time_invariant(alpha, r, extra, t):
    params = RieszFellerParams(alpha, 0.0)
    ell = r + extra
    c = derivative_smoothing_constant(params, ell, r, t)
    assert c == pytest.approx(derivative_smoothing_constant(params, ell, r, 4 * t), rel=1e-8)


def test_derivative_l1_scaling_uniform():
    vals = [derivative_l1_scaled(RieszFellerParams(1.5, 0.0), t) for t in np.geomspace(0.1, 100, 5)]
    assert max(vals) / min(vals) - 1 < 0.05
    # heat kernel: ||G_x||_1 = 1/sqrt(pi t); the kink of |G_x| at 0 costs O(dx^2)
    assert derivative_l1_scaled(HEAT, 1.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-4)


def test_admissible_theta_grid():
    assert admissible_thetas(1.5) == [-0.5, -0.25, 0.0, 0.25, 0.5]
    assert admissible_thetas(2.0) == [0.0]


@pytest.mark.parametrize("alpha", [2.0, 1.5])
def test_property_suite_passes(alpha):
    theta = 0.0 if alpha == 2.0 else 0.5
    results = green_property_suite(RieszFellerParams(alpha, theta))
    failed = [r.name for r in results if not r.passed]
    assert not failed
    slope = next(r for r in results if r.name.startswith("G5 L2"))
    assert slope.measured == pytest.approx(-1 / (2 * alpha), rel=0.02)


def test_property_suite_reports_under_resolution():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        results = green_property_suite(HEAT, Grid(40.0, 64))
    mass = [r for r in results if r.name.startswith("G3 mass t=0.1")][0]
    assert not mass.passed
    assert "under-resolved" in mass.note
