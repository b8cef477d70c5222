"""Exponential time differencing for the perturbation problems around a traveling wave.

The anti-derivative W of the perturbation U = u - ubar obeys
    dW/dt + F(ubar, dW/dxi) = D W,   F(ubar, v) = f(ubar + v) - f(ubar) - s v,
and U itself obeys the conservative form dU/dt + d/dxi F(ubar, U) = D U.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diagnostics import Trajectory, make_record
from .etd import phi1, phi2
from .grid import Grid, GridFunction, dealias_mask, ramp, spectral_derivative, spectral_shift
from .operator import RieszFellerParams, _symbol_half
from .profile import FluxFunction, Profile, stable_dt, translate_profile

SCHEMES = ("ETD1", "ETD2RK")
MASS_TOL = 1e-8
BOUNDARY_W_TOL = 1e-6
BOUNDARY_AMPLITUDE_TOL = 1e-8
BOUNDARY_CELLS = 8


class BlowUpError(RuntimeError):
    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite values at step {step} (t={t:g})")
        self.step = step
        self.t = t


@dataclass(frozen=True)
class State:
    t: float
    W: GridFunction = field(repr=False)
    U: GridFunction = field(repr=False)

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError("time must be non-negative")
        if self.W.grid != self.U.grid:
            raise ValueError("W and U on different grids")

    @classmethod
    def from_W(cls, t: float, W: GridFunction) -> "State":
        return cls(t, W, GridFunction(W.grid, spectral_derivative(W.values, W.grid)))

    def check(self) -> None:
        """Zero perturbation mass and vanishing anti-derivative at both ends."""
        mass = self.U.integral()
        if abs(mass) > MASS_TOL:
            raise ValueError(f"perturbation mass {mass:.3e} is not zero")
        if max(map(abs, end_values(self.W, self.U))) > BOUNDARY_W_TOL:
            raise ValueError("W does not vanish at the boundary")


def end_values(W: GridFunction, U: GridFunction) -> tuple[float, float]:
    """W(-L) and W(L); the last sample sits one cell short of L, so add that cell."""
    w, u = W.values, U.values
    return float(w[0]), float(w[-1] + 0.5 * W.grid.dx * (u[-1] + u[0]))


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    T: float
    record_every: int = 1
    scheme: str = "ETD2RK"
    dealias: bool = True

    def __post_init__(self) -> None:
        if not (self.dt > 0 and self.dt < self.T):
            raise ValueError("need 0 < dt < T")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


def select_shift(u0: GridFunction, profile: Profile) -> float:
    """Shift x0 with int (u0(xi) - ubar(xi + x0)) dxi = 0.

    The mass M(x0) is linear in x0 with slope u- - u+, so x0 = -M(0)/(u- - u+).
    """
    wave = profile.wave
    if wave.u_minus == wave.u_plus:
        raise ValueError("endstates must differ")
    m0 = (u0 - profile.ubar).integral()
    return -m0 / (wave.u_minus - wave.u_plus)


def shifted_profile(profile: Profile, x0: float, f: FluxFunction) -> Profile:
    return profile if x0 == 0 else translate_profile(profile, x0, f)


def antiderivative(U0: GridFunction) -> GridFunction:
    """W(xi) = int_{-L}^{xi} U0 by the trapezoid rule with Euler-Maclaurin end correction."""
    grid = U0.grid
    mass = U0.integral()
    if abs(mass) > MASS_TOL:
        raise ValueError(f"input mass {mass:.3e} is not zero; select the shift first")
    v = U0.values
    h = grid.dx
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (v[1:] + v[:-1]))])
    dv = spectral_derivative(v, grid)
    cum -= h * h / 12.0 * (dv - dv[0])
    return GridFunction(grid, cum)


def nonlinear_term(profile: Profile, W: GridFunction, f: FluxFunction, s: float) -> GridFunction:
    """F(ubar, dW/dxi) = f(ubar + W') - f(ubar) - s W' with spectral W'."""
    ub = profile.ubar.values
    v = spectral_derivative(W.values, W.grid)
    return GridFunction(W.grid, f(ub + v) - f(ub) - s * v)


class _Integrator:
    """Cached ETD coefficients for one (params, grid, dt, scheme) combination."""

    def __init__(self, params: RieszFellerParams, profile: Profile, f: FluxFunction,
                 dt: float, scheme: str, dealias: bool, conservative: bool):
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        grid = profile.grid
        self.grid, self.dt, self.scheme = grid, dt, scheme
        self.ub = np.asarray(profile.ubar.values)
        self.f, self.s = f, profile.wave.s
        z = dt * _symbol_half(params, grid)
        self.E = np.exp(z)
        self.p1 = dt * phi1(z)
        self.p2 = dt * phi2(z)
        self.ik = np.asarray(grid.ik_half)
        mask = dealias_mask(grid) if dealias else np.ones(grid.N // 2 + 1)
        # the mean of F is not aliased and drives W's mean: keep it
        mask[0] = 1.0
        self.mask = mask
        self.conservative = conservative

    def rhs(self, hat: np.ndarray) -> np.ndarray:
        N = self.grid.N
        v = np.fft.irfft(hat if self.conservative else self.ik * hat, N)
        F = self.f(self.ub + v) - self.f(self.ub) - self.s * v
        Fh = np.fft.rfft(F) * self.mask
        return -self.ik * Fh if self.conservative else -Fh

    def advance(self, hat: np.ndarray) -> np.ndarray:
        n0 = self.rhs(hat)
        a = self.E * hat + self.p1 * n0
        if self.scheme == "ETD1":
            return a
        return a + self.p2 * (self.rhs(a) - n0)


def _data_range_dt(profile: Profile, f: FluxFunction, U: np.ndarray) -> float:
    u = profile.ubar.values + U
    return stable_dt(profile.grid, f, float(u.min()), float(u.max()))


def step(params: RieszFellerParams, profile: Profile, f: FluxFunction, state: State,
         dt: float, scheme: str = "ETD2RK", dealias: bool = True) -> State:
    """One ETD step of the W-equation."""
    bound = _data_range_dt(profile, f, state.U.values)
    if dt > bound * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} exceeds the stability bound {bound:g}")
    integ = _Integrator(params, profile, f, dt, scheme, dealias, conservative=False)
    hat = integ.advance(np.fft.rfft(state.W.values))
    W = np.fft.irfft(hat, profile.grid.N)
    if not np.all(np.isfinite(W)):
        raise BlowUpError(1, state.t + dt)
    return State.from_W(state.t + dt, GridFunction(profile.grid, W))


def boundary_amplitude(values: np.ndarray, cells: int = BOUNDARY_CELLS) -> float:
    return float(max(np.max(np.abs(values[:cells])), np.max(np.abs(values[-cells:]))))


def _run(params: RieszFellerParams, profile: Profile, f: FluxFunction, hat0: np.ndarray,
         config: EvolutionConfig, conservative: bool,
         to_fields: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]) -> Trajectory:
    params.require_evolution()
    grid = profile.grid
    W0, U0 = to_fields(hat0)
    bound = _data_range_dt(profile, f, U0)
    if config.dt > bound * (1 + 1e-12):
        raise ValueError(f"dt={config.dt:g} exceeds the stability bound {bound:g}")
    integ = _Integrator(params, profile, f, config.dt, config.scheme, config.dealias, conservative)
    traj = Trajectory(params, profile.wave, f.name, grid)
    traj.append(0.0, GridFunction(grid, W0), GridFunction(grid, U0),
                make_record(params, profile, f, W0, U0))
    hat = hat0
    boundary = boundary_amplitude(U0)
    for n in range(1, config.n_steps + 1):
        hat = integ.advance(hat)
        if n % config.record_every == 0 or n == config.n_steps:
            W, U = to_fields(hat)
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(U))):
                raise BlowUpError(n, n * config.dt)
            boundary = max(boundary, boundary_amplitude(U), boundary_amplitude(W))
            traj.append(n * config.dt, GridFunction(grid, W), GridFunction(grid, U),
                        make_record(params, profile, f, W, U))
    traj.boundary_amplitude = boundary
    traj.boundary_flag = boundary > BOUNDARY_AMPLITUDE_TOL
    return traj


def evolve(params: RieszFellerParams, profile: Profile, f: FluxFunction, W0: GridFunction,
           config: EvolutionConfig) -> Trajectory:
    """Integrate the W-equation from W0, recording diagnostics every ``record_every`` steps."""
    grid = profile.grid
    w = W0.values
    U0 = GridFunction(grid, spectral_derivative(w, grid))
    if max(map(abs, end_values(W0, U0))) > BOUNDARY_W_TOL:
        raise ValueError("W0 must vanish at both ends")
    ik = np.asarray(grid.ik_half)

    def fields(hat):
        return np.fft.irfft(hat, grid.N), np.fft.irfft(ik * hat, grid.N)

    return _run(params, profile, f, np.fft.rfft(w), config, False, fields)


def evolve_u(params: RieszFellerParams, profile: Profile, f: FluxFunction, U0: GridFunction,
             config: EvolutionConfig) -> Trajectory:
    """Integrate the conservative U-equation; W is recovered spectrally for the records."""
    grid = profile.grid
    if abs(U0.integral()) > MASS_TOL:
        raise ValueError("U0 must have zero mass")
    ik = np.asarray(grid.ik_half)
    inv = np.zeros_like(ik)
    inv[1:-1] = 1.0 / ik[1:-1]

    def fields(hat):
        U = np.fft.irfft(hat, grid.N)
        # anti-derivative of the zero-mean part, pinned so that W(-L) = 0
        W = np.fft.irfft(inv * hat, grid.N)
        return W - W[0], U

    return _run(params, profile, f, np.fft.rfft(U0.values), config, True, fields)


def l1_distance_history(a: Trajectory, b: Trajectory, ubar_a: np.ndarray, ubar_b: np.ndarray,
                        offset: float = 0.0) -> np.ndarray:
    """||u_a(t) - u_b(t)||_1 at matched snapshot times.

    ``offset`` realigns b when the two runs were translated by different
    shifts: b is read at xi + offset (offset = x0_b - x0_a).
    """
    if [s.t for s in a.snapshots] != [s.t for s in b.snapshots]:
        raise ValueError("trajectories are not recorded at the same times")
    grid = a.grid
    wave = b.wave
    out = []
    for sa, sb in zip(a.snapshots, b.snapshots):
        ub = GridFunction(grid, ubar_b + sb.U.values)
        if offset:
            ub = translate_step(ub, wave.u_minus, wave.u_plus, offset)
        out.append(np.sum(np.abs(ubar_a + sa.U.values - ub.values)) * grid.dx)
    return np.array(out)


def perturbation(grid: Grid, shape: str, amplitude: float, width: float, center: float = 0.0) -> GridFunction:
    """Initial perturbation of the wave.

    ``gaussian``: a bump a exp(-r^2), which carries mass and needs shift selection.
    ``dipole``: the zero-mass bump -2 a r exp(-r^2).
    """
    x = np.asarray(grid.x)
    r = (x - center) / width
    if shape == "gaussian":
        return GridFunction(grid, amplitude * np.exp(-r**2))
    if shape == "dipole":
        return GridFunction(grid, amplitude * (-2 * r) * np.exp(-r**2))
    if shape == "none":
        return GridFunction(grid, np.zeros(grid.N))
    raise ValueError(f"unknown perturbation shape {shape!r}")


def translate_step(u: GridFunction, left: float, right: float, a: float) -> GridFunction:
    """Samples of u(xi + a) for a field with far-field limits ``left``, ``right``.

    The linear ramp joining the limits is translated exactly and the periodic
    remainder spectrally, so the trapezoid mass changes by exactly a(right - left).
    """
    grid = u.grid
    lin = ramp(grid, left, right)
    slope = (right - left) / (2 * grid.L)
    return GridFunction(grid, lin + slope * a + spectral_shift(u.values - lin, grid, a))


def prepare_initial_data(profile: Profile, u0: GridFunction) -> tuple[float, GridFunction]:
    """Shift selection and anti-derivative for full initial data u0.

    Returns x0 and W0 for the perturbation of the translated data u0(. - x0)
    about the fixed profile; by translation invariance this equals the
    perturbation of u0 about ubar(. + x0), while the profile stays the
    computed discrete steady state.
    """
    wave = profile.wave
    x0 = select_shift(u0, profile)
    moved = translate_step(u0, wave.u_minus, wave.u_plus, -x0)
    return x0, antiderivative(moved - profile.ubar)


def gaussian_W0(grid: Grid, amplitude: float, width: float, center: float = 0.0) -> GridFunction:
    x = np.asarray(grid.x)
    return GridFunction(grid, amplitude * np.exp(-(((x - center) / width) ** 2)))


__all__ = [
    "BlowUpError", "EvolutionConfig", "State", "antiderivative", "evolve", "evolve_u",
    "nonlinear_term", "phi1", "phi2", "select_shift", "shifted_profile", "step",
    "l1_distance_history", "perturbation", "gaussian_W0", "boundary_amplitude",
    "translate_step", "prepare_initial_data",
]
