"""Uniform truncated-line grid and the fields that live on it."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-L, L) with N points (periodic truncation of the line)."""

    half_width: float
    n_points: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if int(self.n_points) != self.n_points or self.n_points <= 0 or self.n_points % 2:
            raise ValueError(f"n_points must be a positive even integer, got {self.n_points}")
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def L(self) -> float:
        return self.half_width

    @property
    def N(self) -> int:
        return self.n_points

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.half_width + self.dx * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers pi*j/L in FFT order (j = 0..N/2-1, -N/2..-1)."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_points, self.dx)
        k.flags.writeable = False
        return k

    @cached_property
    def k_half(self) -> np.ndarray:
        """Non-negative wavenumbers matching ``numpy.fft.rfft`` output."""
        k = 2.0 * np.pi * np.fft.rfftfreq(self.n_points, self.dx)
        k.flags.writeable = False
        return k

    @cached_property
    def ik_half(self) -> np.ndarray:
        """Spectral first-derivative multiplier with the Nyquist mode zeroed."""
        ik = 1j * np.array(self.k_half)
        ik[-1] = 0.0
        ik.flags.writeable = False
        return ik

    def padded(self, factor: int) -> "Grid":
        """Grid with the same spacing on a domain ``factor`` times wider."""
        if int(factor) != factor or factor < 1:
            raise ValueError("pad factor must be a positive integer")
        return Grid(self.half_width * factor, self.n_points * int(factor))

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return GridFunction(self, np.asarray(fn(np.array(self.x)), dtype=float))


@dataclass(frozen=True)
class GridFunction:
    """Real samples of a field at the grid points."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise ValueError("GridFunction values must be real")
        v = np.array(v, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("GridFunction values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, float(c) * self.values)

    __rmul__ = __mul__

    def integral(self) -> float:
        """Trapezoid integral over the periodic grid (sum times dx)."""
        return float(np.sum(self.values) * self.grid.dx)

    def spectrum(self) -> "SpectralField":
        return SpectralField(self.grid, np.fft.fft(self.values))


@dataclass(frozen=True)
class SpectralField:
    """Discrete Fourier coefficients in numpy FFT ordering."""

    grid: Grid
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = np.array(self.coefficients, dtype=complex)
        if c.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} coefficients, got shape {c.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        c = self.coefficients
        mirrored = np.conj(np.roll(c[::-1], 1))
        scale = max(float(np.max(np.abs(c))), 1e-300)
        return bool(np.max(np.abs(c - mirrored)) <= rtol * scale)

    def to_grid_function(self) -> GridFunction:
        if not self.is_hermitian(1e-9):
            raise ValueError("coefficients do not represent a real field")
        return GridFunction(self.grid, np.fft.ifft(self.coefficients).real)


def _same_grid(a: GridFunction, b: GridFunction) -> None:
    if a.grid != b.grid:
        raise ValueError("grid mismatch")


def ramp(grid: Grid, left: float, right: float) -> np.ndarray:
    """Linear interpolant between ``left`` at -L and ``right`` at +L."""
    return left + (right - left) * (np.asarray(grid.x) + grid.L) / (2.0 * grid.L)


def spectral_derivative(values: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    """Spectral derivative of a periodic sample vector; odd orders drop the Nyquist mode."""
    mult = np.array(grid.ik_half) if order % 2 else (1j * np.asarray(grid.k_half))
    return np.fft.irfft(mult**order * np.fft.rfft(values), grid.n_points)


def spectral_shift(values: np.ndarray, grid: Grid, a: float) -> np.ndarray:
    """Samples of v(x + a) for a periodic band-limited v."""
    hat = np.fft.rfft(values) * np.exp(1j * np.asarray(grid.k_half) * a)
    hat[-1] = hat[-1].real * np.cos(grid.k_half[-1] * a)
    return np.fft.irfft(hat, grid.n_points)


def spectral_eval(values: np.ndarray, grid: Grid, xq: float) -> float:
    """Trigonometric interpolant of periodic samples evaluated at one point."""
    hat = np.fft.rfft(values) / grid.n_points
    w = np.full(hat.shape, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    phase = np.exp(1j * np.asarray(grid.k_half) * (xq + grid.L))
    # Nyquist mode is interpolated by its cosine part only
    phase[-1] = np.cos(grid.k_half[-1] * (xq + grid.L))
    return float(np.real(np.sum(w * hat * phase)))


def dealias_mask(grid: Grid) -> np.ndarray:
    """Two-thirds rule mask on rfft modes."""
    j = np.arange(grid.n_points // 2 + 1)
    return (j < grid.n_points / 3.0).astype(float)
