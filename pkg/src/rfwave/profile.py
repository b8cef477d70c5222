"""Monotone traveling-wave profiles: Rankine-Hugoniot speed, classical ODE profile,
and fractional profiles by relaxation to steady state."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .grid import Grid, GridFunction, ramp, spectral_derivative, spectral_eval, spectral_shift
from .etd import phi1, phi2
from .operator import RieszFellerParams, _symbol_half, apply_spectral_step

MONOTONE_TOL = 1e-10
ENDSTATE_TOL = 1e-6
BOUNDARY_TOL = 1e-4


class ProfileError(RuntimeError):
    """Profile construction failed (non-convergence, lost monotonicity, short domain)."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class FluxFunction:
    """Polynomial flux f(u) = sum_n a_n u^n, n >= 1, so that f(0) = 0."""

    coefficients: tuple[float, ...]
    name: str = "polynomial"

    def __post_init__(self) -> None:
        c = tuple(float(a) for a in self.coefficients)
        if not c or not all(math.isfinite(a) for a in c):
            raise ValueError("flux needs finite coefficients a_1, a_2, ...")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def burgers(cls) -> "FluxFunction":
        return cls((0.0, 1.0), "burgers")

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> "FluxFunction":
        return cls(tuple(coefficients), "polynomial")

    @property
    def _poly(self) -> np.polynomial.Polynomial:
        return np.polynomial.Polynomial((0.0,) + self.coefficients)

    def f(self, u):
        return self._poly(u)

    def df(self, u):
        return self._poly.deriv(1)(u)

    def d2f(self, u):
        return self._poly.deriv(2)(u)

    __call__ = f

    def is_convex_on(self, lo: float, hi: float, samples: int = 2001) -> bool:
        u = np.linspace(lo, hi, samples)
        return bool(np.all(self.d2f(u) >= 0.0))


def rankine_hugoniot(f: FluxFunction, u_minus: float, u_plus: float) -> float:
    """s = (f(u+) - f(u-)) / (u+ - u-)."""
    if u_minus == u_plus:
        raise ValueError("endstates must differ")
    return float((f(u_plus) - f(u_minus)) / (u_plus - u_minus))


@dataclass(frozen=True)
class WaveData:
    u_minus: float
    u_plus: float
    s: float

    def __post_init__(self) -> None:
        if not self.u_plus < self.u_minus:
            raise ValueError(f"need u_plus < u_minus, got ({self.u_minus}, {self.u_plus})")

    @classmethod
    def from_flux(cls, f: FluxFunction, u_minus: float, u_plus: float) -> "WaveData":
        return cls(float(u_minus), float(u_plus), rankine_hugoniot(f, u_minus, u_plus))

    @property
    def jump(self) -> float:
        return self.u_minus - self.u_plus

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.u_minus + self.u_plus)


def _check_wave(f: FluxFunction, wave: WaveData) -> None:
    if abs(wave.s - rankine_hugoniot(f, wave.u_minus, wave.u_plus)) > 1e-14 * max(1.0, abs(wave.s)):
        raise ValueError("wave speed does not satisfy the Rankine-Hugoniot condition")
    if not f.is_convex_on(wave.u_plus, wave.u_minus):
        raise ValueError("flux is not convex on [u_plus, u_minus]")
    if not f.df(wave.u_plus) < wave.s < f.df(wave.u_minus):
        raise ValueError("entropy ordering f'(u+) < s < f'(u-) violated")


def smooth_step(grid: Grid, wave: WaveData) -> tuple[np.ndarray, np.ndarray]:
    """Unit-width tanh step joining u- to u+ and its exact derivative."""
    x = np.asarray(grid.x)
    half = 0.5 * wave.jump
    base = wave.midpoint - half * np.tanh(x / 2)
    dbase = -0.5 * half / np.cosh(x / 2) ** 2
    return base, dbase


@dataclass(frozen=True)
class Profile:
    grid: Grid
    ubar: GridFunction = field(repr=False)
    base: GridFunction = field(repr=False)
    perturbation: GridFunction = field(repr=False)
    D_ubar: GridFunction = field(repr=False)
    residual_norm: float
    params: RieszFellerParams
    wave: WaveData

    def __post_init__(self) -> None:
        for g in (self.ubar, self.base, self.perturbation, self.D_ubar):
            if g.grid != self.grid:
                raise ValueError("profile fields live on different grids")
        p = self.perturbation.values
        # algebraic profile tails leave a one-cell mismatch of order dx^alpha-ish
        if abs(p[0] - p[-1]) > BOUNDARY_TOL * self.wave.jump:
            raise ValueError("perturbation is not boundary-compatible")

    @property
    def max_increment(self) -> float:
        return float(np.max(np.diff(self.ubar.values)))

    @property
    def endstate_errors(self) -> tuple[float, float]:
        u = self.ubar.values
        return abs(u[0] - self.wave.u_minus), abs(u[-1] - self.wave.u_plus)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xi", "ubar", "D_ubar"])
            for row in zip(self.grid.x, self.ubar.values, self.D_ubar.values):
                w.writerow([repr(float(v)) for v in row])


def stationary_residual(params: RieszFellerParams, f: FluxFunction, wave: WaveData,
                        u: GridFunction, u_left: float | None = None,
                        u_right: float | None = None) -> float:
    """L2 norm of d/dxi(f(u) - s u) - D u for a field with limits ``u_left``, ``u_right``."""
    grid = u.grid
    u_left = wave.u_minus if u_left is None else u_left
    u_right = wave.u_plus if u_right is None else u_right
    x = np.asarray(grid.x)
    half = 0.5 * (u_left - u_right)
    base = 0.5 * (u_left + u_right) - half * np.tanh(x / 2)
    dbase = -0.5 * half / np.cosh(x / 2) ** 2
    h = lambda v: f(v) - wave.s * v
    flux = spectral_derivative(h(u.values) - h(base), grid) + (f.df(base) - wave.s) * dbase
    r = flux - apply_spectral_step(params, u, u_left, u_right).values
    return float(math.sqrt(np.sum(r**2) * grid.dx))


def profile_residual(params: RieszFellerParams, profile: Profile, f: FluxFunction,
                     wave: WaveData | None = None) -> float:
    """Stationarity residual of the profile, recomputed from ubar."""
    wave = wave or profile.wave
    return stationary_residual(params, f, wave, profile.ubar)


def profile_speed(params: RieszFellerParams, profile: Profile, f: FluxFunction) -> float:
    """Wave speed recovered from the profile by least-squares flux balance.

    Minimizes || d/dxi f(ubar) - s ubar' - D ubar ||_2 over s.
    """
    grid = profile.grid
    wave = profile.wave
    base, dbase = profile.base.values, smooth_step(grid, wave)[1]
    dflux = spectral_derivative(f(profile.ubar.values) - f(base), grid) + f.df(base) * dbase
    du = spectral_derivative(profile.perturbation.values, grid) + dbase
    d = apply_spectral_step(params, profile.ubar, wave.u_minus, wave.u_plus).values
    return float(np.dot(dflux - d, du) / np.dot(du, du))


def _finish(params: RieszFellerParams, f: FluxFunction, wave: WaveData, grid: Grid,
            u: np.ndarray, d_u: np.ndarray | None = None) -> Profile:
    base, _ = smooth_step(grid, wave)
    ug = GridFunction(grid, u)
    if d_u is None:
        d_u = apply_spectral_step(params, ug, wave.u_minus, wave.u_plus).values
    res = stationary_residual(params, f, wave, ug)
    return Profile(grid, ug, GridFunction(grid, base), GridFunction(grid, u - base),
                   GridFunction(grid, d_u), res, params, wave)


def classical_profile(f: FluxFunction, wave: WaveData, grid: Grid, substeps: int = 8) -> Profile:
    """Solve ubar' = f(ubar) - s ubar - (f(u-) - s u-) by RK4 from ubar(0) = (u- + u+)/2."""
    _check_wave(f, wave)
    c = f(wave.u_minus) - wave.s * wave.u_minus
    rhs = lambda v: f(v) - wave.s * v - c
    n0 = grid.N // 2  # index of xi = 0
    u = np.empty(grid.N)
    u[n0] = wave.midpoint
    for direction, stop in ((1, grid.N), (-1, -1)):
        hstep = direction * grid.dx / substeps
        v = wave.midpoint
        for i in range(n0 + direction, stop, direction):
            for _ in range(substeps):
                k1 = rhs(v)
                k2 = rhs(v + 0.5 * hstep * k1)
                k3 = rhs(v + 0.5 * hstep * k2)
                k4 = rhs(v + hstep * k3)
                v = v + hstep * (k1 + 2 * k2 + 2 * k3 + k4) / 6
            u[i] = v
    err_l, err_r = abs(u[0] - wave.u_minus), abs(u[-1] - wave.u_plus)
    if max(err_l, err_r) > ENDSTATE_TOL:
        raise ProfileError(f"profile does not reach its endstates on [-L, L] "
                           f"(errors {err_l:.2e}, {err_r:.2e}); increase L")
    # D ubar = ubar'' = (f'(ubar) - s) ubar' along the ODE
    d_u = (f.df(u) - wave.s) * rhs(u)
    return _finish(RieszFellerParams(2.0, 0.0), f, wave, grid, u, d_u)


def stable_dt(grid: Grid, f: FluxFunction, lo: float, hi: float) -> float:
    """Advective bound 0.5 dx / max |f'(u)| over the data range [lo, hi]."""
    speed = float(np.max(np.abs(f.df(np.linspace(lo, hi, 201)))))
    return 0.5 * grid.dx / max(speed, 1e-12)


def fractional_profile(
    params: RieszFellerParams,
    f: FluxFunction,
    wave: WaveData,
    grid: Grid,
    t_relax: float = 2000.0,
    dt: float | None = None,
    tol: float = 1e-8,
    check_every: float = 5.0,
) -> Profile:
    """Relax du/dt + d/dxi(f(u) - s u) = D u to steady state from the tanh step.

    The field is split as u = base + p; the flux of the base is differentiated
    analytically and D acts on the step through its ramp-subtracted periodic
    part. Time stepping is ETD2RK on p. On convergence the profile is
    translated so that ubar(0) = (u- + u+)/2.
    """
    params.require_evolution()
    _check_wave(f, wave)
    base, dbase = smooth_step(grid, wave)
    N = grid.N
    if dt is None:
        dt = stable_dt(grid, f, wave.u_plus, wave.u_minus)
    psi = _symbol_half(params, grid)
    ik = np.asarray(grid.ik_half)
    d_base = apply_spectral_step(params, GridFunction(grid, base), wave.u_minus, wave.u_plus).values
    h = lambda v: f(v) - wave.s * v
    dh_base = (f.df(base) - wave.s) * dbase
    forcing = d_base - dh_base

    def nonlinear(ph: np.ndarray) -> np.ndarray:
        p = np.fft.irfft(ph, N)
        # no dealiasing: the steady state must solve the undealiased residual equation
        flux_hat = np.fft.rfft(h(base + p) - h(base))
        return np.fft.rfft(forcing) - ik * flux_hat

    z = dt * psi
    E = np.exp(z)
    p1, p2 = phi1(z), phi2(z)
    ph = np.zeros(N // 2 + 1, dtype=complex)
    steps_per_check = max(1, int(round(check_every / dt)))
    n_steps = int(math.ceil(t_relax / dt))
    res = float("inf")
    for n in range(1, n_steps + 1):
        nu = nonlinear(ph)
        a = E * ph + dt * p1 * nu
        ph = a + dt * p2 * (nonlinear(a) - nu)
        if n % steps_per_check == 0 or n == n_steps:
            p = np.fft.irfft(ph, N)
            if not np.all(np.isfinite(p)):
                raise ProfileError(f"relaxation blew up at step {n}")
            res = stationary_residual(params, f, wave, GridFunction(grid, base + p))
            if res < tol:
                break
    else:
        raise ProfileError(f"relaxation did not reach tol {tol:.1e} by t={t_relax}; "
                           f"final residual {res:.3e}", res)

    u = _normalize(grid, base + np.fft.irfft(ph, N), wave)
    inc = float(np.max(np.diff(u)))
    if inc > MONOTONE_TOL:
        raise ProfileError(f"profile not monotone (max increment {inc:.2e}); grid under-resolved", res)
    return _finish(params, f, wave, grid, u)


def _normalize(grid: Grid, u: np.ndarray, wave: WaveData) -> np.ndarray:
    """Translate so that the profile crosses the midpoint at xi = 0."""
    lin = ramp(grid, wave.u_minus, wave.u_plus)
    q = u - lin
    slope = (wave.u_plus - wave.u_minus) / (2 * grid.L)
    g = lambda a: spectral_eval(q, grid, a) + wave.u_minus + slope * (a + grid.L) - wave.midpoint
    i = int(np.argmax(u < wave.midpoint))
    x = np.asarray(grid.x)
    a = brentq(g, x[i - 1] - grid.dx, x[i] + grid.dx, xtol=1e-15, rtol=1e-15)
    return lin + slope * a + spectral_shift(q, grid, a)


def translate_profile(profile: Profile, shift: float, f: FluxFunction) -> Profile:
    """Profile ubar(. + shift) on the same grid (exact for the periodic part)."""
    grid, wave = profile.grid, profile.wave
    lin = ramp(grid, wave.u_minus, wave.u_plus)
    slope = (wave.u_plus - wave.u_minus) / (2 * grid.L)
    u = lin + slope * shift + spectral_shift(profile.ubar.values - lin, grid, shift)
    d_u = spectral_shift(profile.D_ubar.values, grid, shift)
    return _finish(profile.params, f, wave, grid, u, d_u)


def load_profile(path: str | Path, params: RieszFellerParams, f: FluxFunction,
                 wave: WaveData) -> Profile:
    """Read a profile written by ``Profile.to_csv``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["xi", "ubar", "D_ubar"]:
        raise ValueError(f"unexpected header {rows[0]}")
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    xi = data[:, 0]
    grid = Grid(-xi[0], xi.size)
    if not np.allclose(xi, grid.x, rtol=0, atol=1e-12 * grid.L):
        raise ValueError("xi column is not a uniform grid on [-L, L)")
    return _finish(params, f, wave, grid, data[:, 1], data[:, 2])
