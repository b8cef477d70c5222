import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rfwave.diagnostics import (
    ENTROPIES, convexity_gap, dilate, energy_ledger, fit_power_law, gn_constant, gn_gap, gn_ratio,
    gnuplot_script, interpolation_gap, lp_norm, nash_constant, nash_gap, nash_ratio,
    sobolev_norm, sobolev_seminorm, write_json, write_snapshot_csv, write_trajectory_csv,
    zero_integral_gap,
)
from rfwave.evolution import EvolutionConfig, evolve, gaussian_W0
from rfwave.experiments import random_family
from rfwave.grid import Grid, GridFunction, spectral_derivative
from rfwave.operator import RieszFellerParams, apply_spectral
from rfwave.profile import classical_profile

from conftest import gaussian

G = Grid(40.0, 4096)
SKEW = RieszFellerParams(1.5, 0.3)
FAMILY = random_family(Grid(40.0, 1024), 40, 4.0, seed=7)
family_member = st.integers(0, len(FAMILY) - 1).map(lambda i: FAMILY[i])


# ---------------------------------------------------------------- norms

def test_seminorm_single_mode():
    g = Grid(np.pi, 64)
    f = g.sample(lambda x: np.sin(3 * x))
    for sigma in (0.0, 0.5, 1.25, 2.0):
        assert sobolev_seminorm(f, sigma) == pytest.approx(3**sigma * lp_norm(f, 2), rel=1e-13)


def test_seminorm_gaussian_l2():
    assert sobolev_seminorm(G.sample(lambda x: np.exp(-x**2 / 2)), 0.0) == pytest.approx(
        math.pi**0.25, rel=1e-12)


@given(family_member)
def test_seminorm_one_is_derivative_norm(f):
    d = GridFunction(f.grid, spectral_derivative(f.values, f.grid))
    assert sobolev_seminorm(f, 1.0) == pytest.approx(lp_norm(d, 2), rel=1e-12)


@given(family_member)
def test_parseval(f):
    assert abs(sobolev_seminorm(f, 0.0) - lp_norm(f, 2)) < 1e-10


def test_seminorm_rejects_negative_order():
    with pytest.raises(ValueError):
        sobolev_seminorm(G.sample(gaussian), -0.5)


# ---------------------------------------------------------------- inequalities

def test_interpolation_single_mode_minimum():
    g = Grid(np.pi, 64)
    f = g.sample(lambda x: np.sin(2 * x))
    # minimizer eps = sqrt((2 - sigma)/sigma)/|k|, which is 1/|k| at sigma = 1
    for sigma in (0.5, 1.0, 1.5):
        eps = np.geomspace(0.05, 5, 2001)
        gaps = np.array([interpolation_gap(f, sigma, e) for e in eps])
        best = eps[np.argmin(gaps)]
        assert best == pytest.approx(math.sqrt((2 - sigma) / sigma) / 2, rel=0.01)
        assert gaps.min() >= -1e-12


def test_interpolation_zero_field():
    assert interpolation_gap(GridFunction(G, np.zeros(G.N)), 1.0, 1.0) == 0.0


@given(family_member, st.floats(0.0, 2.0), st.floats(0.01, 100.0))
def test_interpolation_gap_nonnegative(f, sigma, eps):
    assert interpolation_gap(f, sigma, eps) >= -1e-12


@given(family_member)
def test_interpolation_alpha_case(f):
    assert interpolation_gap(f, 1.5, 1.0) >= -1e-12


@given(family_member, st.floats(0.1, 1.5), st.floats(0.1, 10.0))
def test_nash_homogeneous(f, sigma, c):
    assert nash_ratio(f * c, sigma) == pytest.approx(nash_ratio(f, sigma), rel=1e-12)


@given(family_member, st.sampled_from([0.5, 2.0, 3.0]))
def test_nash_dilation(f, lam):
    assert nash_ratio(dilate(f, lam), 0.75) == pytest.approx(nash_ratio(f, 0.75), rel=1e-10)


def test_nash_gaussian_family_bounded():
    ratios = [nash_ratio(G.sample(lambda x: gaussian(x, w)), 1.0) for w in (0.5, 1, 2, 4, 8)]
    assert max(ratios) < nash_constant(1.0)
    # e^{-x^2/w^2} is a dilation family: the ratio is 1/(2 pi) for every width
    assert np.allclose(ratios, 1 / (2 * math.pi), rtol=1e-10)


@given(family_member, st.sampled_from([0.5, 0.75, 1.0]))
def test_nash_gap_nonnegative(f, sigma):
    assert nash_gap(f, sigma) >= -1e-12


@given(family_member, st.floats(0.1, 10.0))
def test_gn_homogeneous(f, c):
    assert gn_ratio(f * c, 0.75) == pytest.approx(gn_ratio(f, 0.75), rel=1e-12)


def test_gn_gaussian_baseline():
    # independent value from scipy quadrature of the continuum norms
    assert gn_ratio(G.sample(gaussian), 0.75) == pytest.approx(0.4484388345423712, rel=1e-12)


@given(family_member, st.sampled_from([0.5, 0.75, 1.0]))
def test_gn_gap_nonnegative(f, sigma):
    assert gn_gap(f, sigma) >= -1e-12


def test_gn_constant_bounds_sup_norm():
    for f in FAMILY:
        assert lp_norm(f, math.inf) <= gn_constant(f.grid, 0.75) * sobolev_norm(f, 0.75) * (1 + 1e-12)


def test_gn_rejects_small_sigma():
    with pytest.raises(ValueError):
        gn_ratio(G.sample(gaussian), 0.2)


def test_ratios_reject_zero_field():
    with pytest.raises(ValueError):
        nash_ratio(GridFunction(G, np.zeros(G.N)), 1.0)


# ---------------------------------------------------------------- entropy and zero integral

def test_convexity_gap_linear_entropy(consts_skew):
    u = G.sample(np.tanh)
    gap = convexity_gap(SKEW, consts_skew, u, "linear", -1.0, 1.0).values
    assert np.max(np.abs(gap)) < 1e-10


@pytest.mark.parametrize("eta", ENTROPIES)
def test_convexity_gap_constant(consts_skew, eta):
    u = GridFunction(G, np.full(G.N, 0.3))
    assert np.max(np.abs(convexity_gap(SKEW, consts_skew, u, eta, 0.3, 0.3).values)) < 1e-12


@pytest.mark.parametrize("eta", ENTROPIES)
def test_convexity_gap_tanh_nonnegative(consts_skew, eta):
    gap = convexity_gap(SKEW, consts_skew, G.sample(np.tanh), eta, -1.0, 1.0).values
    assert gap.min() >= -1e-6


@given(st.floats(-3, 3))
def test_zero_integral_constant(c):
    from rfwave.operator import QuadratureConstants
    consts = QuadratureConstants(0.4, 0.2, 400.0, 6 * G.dx)
    assert zero_integral_gap(SKEW, consts, GridFunction(G, np.full(G.N, c)), c, c) == 0.0


def test_zero_integral_tanh(consts_skew):
    assert zero_integral_gap(SKEW, consts_skew, G.sample(np.tanh), -1.0, 1.0) < 1e-5


def test_zero_integral_gaussian(consts_skew):
    v = G.sample(gaussian)
    assert zero_integral_gap(SKEW, consts_skew, v, 0.0, 0.0) < 1e-6
    # spectral side: the mean of D v is psi(0) times the mean of v
    assert abs(apply_spectral(SKEW, v).integral()) < 1e-14


# ---------------------------------------------------------------- ledger and fits

@pytest.fixture(scope="module")
def small_run():
    from rfwave.profile import FluxFunction, WaveData
    f = FluxFunction.burgers()
    g = Grid(40.0, 512)
    prof = classical_profile(f, WaveData.from_flux(f, 1.0, 0.0), g)
    zero = evolve(RieszFellerParams(2.0, 0.0), prof, f, GridFunction(g, np.zeros(g.N)),
                  EvolutionConfig(0.02, 2.0, 10))
    small = evolve(RieszFellerParams(2.0, 0.0), prof, f, gaussian_W0(g, 0.05, 2.0),
                   EvolutionConfig(0.02, 20.0, 10))
    return zero, small


def test_ledger_zero_trajectory(small_run):
    for row in energy_ledger(small_run[0]):
        assert row.H1 == row.energy == row.energy_sup == 0.0
        assert row.cumulative_dissipation == row.cumulative_cross == row.cross_increment == 0.0
        assert not row.flagged


def test_ledger_small_data(small_run):
    rows = energy_ledger(small_run[1])
    h1 = np.array([r.H1 for r in rows])
    assert np.all(np.diff(h1) <= 1e-8)
    assert all(r.cross_increment <= 0.0 for r in rows)
    cum = np.array([r.cumulative_dissipation for r in rows])
    assert np.all(np.diff(cum) >= 0)


def test_fit_exact_power_laws():
    t = np.arange(0.0, 201.0)
    slope, amp = fit_power_law(t, (1 + t) ** -0.25, 2.0)
    assert abs(slope + 0.25) < 1e-10 and amp == pytest.approx(1.0, rel=1e-12)
    slope, amp = fit_power_law(t, 3 * (1 + t) ** (-1 / 3), 1.5)
    assert abs(slope + 1 / 3) < 1e-10 and amp == pytest.approx(3.0, rel=1e-12)


def test_fit_needs_points():
    with pytest.raises(ValueError):
        fit_power_law([10.0, 11.0], [1.0, 0.9], 2.0)


# ---------------------------------------------------------------- output

def test_csv_round_trip_precision(tmp_path, small_run):
    traj = small_run[1]
    write_trajectory_csv(traj, tmp_path / "t.csv")
    write_snapshot_csv(traj, -1, tmp_path / "s.csv")
    data = np.genfromtxt(tmp_path / "s.csv", delimiter=",", names=True)
    assert np.array_equal(data["W"], traj.snapshots[-1].W.values)
    rows = np.genfromtxt(tmp_path / "t.csv", delimiter=",", names=True)
    assert np.array_equal(rows["t"], traj.times)


def test_json_sorted_and_stable(tmp_path):
    write_json({"b": 1, "a": [0.1, 2]}, tmp_path / "x.json")
    text = (tmp_path / "x.json").read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [0.1, 2], "b": 1}


def test_gnuplot_script_references_files():
    script = gnuplot_script(["a.csv", "b.csv"], ["A", "B"], "L2", "out.png")
    assert "a.csv" in script and "b.csv" in script and "out.png" in script
    assert "set logscale" in script
