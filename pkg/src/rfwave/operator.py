"""Riesz-Feller operator D^alpha_theta in Fourier-multiplier and singular-integral form."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import nnls
from scipy.signal import fftconvolve

from .grid import Grid, GridFunction, ramp


@dataclass(frozen=True)
class RieszFellerParams:
    """Order ``alpha`` and skewness ``theta`` with |theta| <= min(alpha, 2 - alpha)."""

    alpha: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        a, t = float(self.alpha), float(self.theta)
        if not (np.isfinite(a) and np.isfinite(t)):
            raise ValueError("alpha and theta must be finite")
        if not 0.0 < a <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {a}")
        if abs(t) > min(a, 2.0 - a) + 1e-14:
            raise ValueError(f"theta={t} not admissible for alpha={a}: need |theta| <= {min(a, 2 - a)}")
        if a > 1.0:
            assert math.cos(t * math.pi / 2) > 0.0
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "theta", t)

    @property
    def cos_factor(self) -> float:
        return math.cos(self.theta * math.pi / 2)

    @property
    def sin_factor(self) -> float:
        return math.sin(self.theta * math.pi / 2)

    def require_evolution(self) -> "RieszFellerParams":
        """Reject orders outside the range the evolution solver supports."""
        if self.alpha <= 1.0:
            raise ValueError(f"evolution requires alpha > 1, got {self.alpha}")
        return self


def symbol(params: RieszFellerParams, k):
    """psi(k) = -|k|^alpha (cos(theta pi/2) + i sgn(k) sin(theta pi/2))."""
    k = np.asarray(k, dtype=float)
    mag = np.abs(k) ** params.alpha
    out = -mag * (params.cos_factor + 1j * np.sign(k) * params.sin_factor)
    return out if out.ndim else complex(out)


def _symbol_half(params: RieszFellerParams, grid: Grid) -> np.ndarray:
    psi = symbol(params, grid.k_half)
    # real-valued Nyquist mode: keep only the even part of the symbol there
    psi[-1] = psi[-1].real
    return psi


def _check_finite(f: GridFunction) -> None:
    if not np.all(np.isfinite(f.values)):
        raise ValueError("input contains non-finite values")


def apply_spectral(params: RieszFellerParams, f: GridFunction, pad: int = 1) -> GridFunction:
    """Apply D^alpha_theta as a Fourier multiplier.

    With ``pad > 1`` the field is extended by its end value onto a wider grid of
    the same spacing before transforming, which suppresses periodic images.
    """
    _check_finite(f)
    grid = f.grid
    if pad == 1:
        vals = np.fft.irfft(_symbol_half(params, grid) * np.fft.rfft(f.values), grid.N)
        return GridFunction(grid, vals)
    big = grid.padded(pad)
    c = f.values[0]
    ext = np.zeros(big.N)
    start = (big.N - grid.N) // 2
    ext[start:start + grid.N] = f.values - c
    out = np.fft.irfft(_symbol_half(params, big) * np.fft.rfft(ext), big.N)
    return GridFunction(grid, out[start:start + grid.N])


def apply_spectral_step(
    params: RieszFellerParams,
    f: GridFunction,
    f_left: float,
    f_right: float,
    pad: int = 1,
) -> GridFunction:
    """Apply D^alpha_theta to a step-like field with far-field limits ``f_left``, ``f_right``.

    The linear ramp joining the limits is removed before transforming. On the
    periodic grid this is the operator acting on the derivative through the
    multiplier psi(k)/(ik). With ``pad > 1`` the field is extended by its
    constant limits onto a wider grid, approximating the whole-line value.
    """
    _check_finite(f)
    grid = f.grid
    if pad == 1:
        return apply_spectral(params, GridFunction(grid, f.values - ramp(grid, f_left, f_right)))
    big = grid.padded(pad)
    start = (big.N - grid.N) // 2
    ext = np.empty(big.N)
    ext[:start] = f_left
    ext[start:start + grid.N] = f.values
    ext[start + grid.N:] = f_right
    ext -= ramp(big, f_left, f_right)
    out = np.fft.irfft(_symbol_half(params, big) * np.fft.rfft(ext), big.N)
    return GridFunction(grid, out[start:start + grid.N])


@dataclass(frozen=True)
class QuadratureConstants:
    """Weights of the one-sided singular integrals plus quadrature geometry."""

    c1: float
    c2: float
    truncation: float
    inner_cutoff: float
    residual: float = float("nan")

    def __post_init__(self) -> None:
        if self.c1 < 0 or self.c2 < 0 or not self.c1 + self.c2 > 0:
            raise ValueError(f"need c1, c2 >= 0 with c1 + c2 > 0, got ({self.c1}, {self.c2})")
        if not self.truncation > self.inner_cutoff > 0:
            raise ValueError("need truncation > inner_cutoff > 0")


def closed_form_constants(params: RieszFellerParams) -> tuple[float, float]:
    """Analytic (c1, c2) for 1 < alpha < 2, used as an independent check on calibration."""
    a = params.alpha
    if not 1.0 < a < 2.0:
        raise ValueError("closed form available for 1 < alpha < 2")
    g = math.gamma(-a)
    s = -params.cos_factor / (g * math.cos(a * math.pi / 2))
    d = params.sin_factor / (g * math.sin(a * math.pi / 2))
    return max((s + d) / 2, 0.0), max((s - d) / 2, 0.0)


# 8th-order central stencils for first and second derivatives
_D1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
_D2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
_GAUSS_NODES = 20


@lru_cache(maxsize=64)
def _weights(alpha: float, h: float, order: int, n_panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Inner-region and far-panel weights for the kernel s^(-1-alpha) on a grid of spacing h.

    Inner region [0, order*h]: polynomial interpolation of g(s)/s^2 with exact
    moments. Panels beyond it: degree-``order`` Lagrange interpolation on grid
    nodes integrated against the kernel by Gauss-Legendre.
    """
    P = order
    nodes = np.arange(P + 1, dtype=float)
    coef = np.linalg.inv(np.vander(nodes, P + 1, increasing=True))
    n = np.arange(P + 1)
    mom = P ** (n + 2 - alpha) / (n + 2 - alpha)
    w_in = h ** (2 - alpha) * (mom @ coef)

    gx, gw = np.polynomial.legendre.leggauss(_GAUSS_NODES)
    t = (gx + 1) / 2 * P
    wt = gw * P / 2
    lag = np.ones((P + 1, t.size))
    for j in range(P + 1):
        for m in range(P + 1):
            if m != j:
                lag[j] *= (t - m) / (j - m)
    s0 = P * np.arange(1, n_panels + 1)[:, None]
    panel = ((s0 + t[None, :]) ** (-1 - alpha) * wt[None, :]) @ lag.T
    far = np.zeros(n_panels * P + P + 1)
    for j in range(P + 1):
        far[P * np.arange(1, n_panels + 1) + j] += panel[:, j]
    far *= h ** (-alpha)
    w_in.flags.writeable = False
    far.flags.writeable = False
    return w_in, far


def _one_sided(v: np.ndarray, h: float, alpha: float, v_left: float, v_right: float,
               truncation: float, order: int) -> np.ndarray:
    """int_0^inf (v(x+s) - v(x) - v'(x) s) s^(-1-alpha) ds at every grid point."""
    N = v.size
    P = order
    n_panels = max(1, int(math.ceil(truncation / (h * P))) - 1)
    w_in, far = _weights(alpha, h, P, n_panels)
    m_cells = n_panels * P + P
    ext = np.concatenate([np.full(4, v_left), v, np.full(4, v_right)])
    d1 = np.convolve(ext, _D1[::-1], "valid") / h
    d2 = np.convolve(ext, _D2[::-1], "valid") / h**2
    e = np.concatenate([v, np.full(m_cells, v_right)])

    out = w_in[0] * d2 / 2
    for j in range(1, P + 1):
        out += w_in[j] * (e[j:j + N] - v - d1 * j * h) / (j * h) ** 2
    far = far.copy()
    far[:P] = 0.0
    out += fftconvolve(e, far[::-1], mode="valid")[:N]
    out -= v * far.sum() + d1 * h * float(np.arange(far.size) @ far)
    # analytic tail beyond the last panel, with v(x+s) = v_right there
    m = (far.size - 1) * h
    out += (v_right - v) * m ** (-alpha) / alpha - d1 * m ** (1 - alpha) / (alpha - 1)
    return out


def _order_for(consts: QuadratureConstants, h: float) -> int:
    return int(min(8, max(2, round(consts.inner_cutoff / h))))


def apply_singular(
    params: RieszFellerParams,
    consts: QuadratureConstants,
    f: GridFunction,
    f_left: float | None = None,
    f_right: float | None = None,
) -> GridFunction:
    """Apply D^alpha_theta through its singular-integral representation.

    c1 * int_0^inf (v(x+s) - v(x) - v'(x)s) s^(-1-alpha) ds
    + c2 * int_0^inf (v(x-s) - v(x) + v'(x)s) s^(-1-alpha) ds,
    with values beyond the grid replaced by the far-field limits.
    """
    if not 1.0 < params.alpha < 2.0:
        raise ValueError("singular-integral form requires 1 < alpha < 2")
    if f_left is None or f_right is None:
        raise ValueError("far-field limits are required: offsets up to the truncation leave the grid")
    _check_finite(f)
    h = f.grid.dx
    P = _order_for(consts, h)
    # D annihilates constants; removing one keeps constant fields exactly zero
    v = f.values - f_left
    f_left, f_right = 0.0, f_right - f_left
    out = np.zeros_like(v)
    if consts.c1 > 0:
        out += consts.c1 * _one_sided(v, h, params.alpha, f_left, f_right, consts.truncation, P)
    if consts.c2 > 0:
        out += consts.c2 * _one_sided(v[::-1], h, params.alpha, f_right, f_left,
                                      consts.truncation, P)[::-1]
    return GridFunction(f.grid, out)


DEFAULT_CALIBRATION_GRID = Grid(40.0, 4096)
CALIBRATION_WIDTHS = (0.5, 1.0, 2.0)
_REFERENCE_PAD = 32


def calibrate_constants(
    params: RieszFellerParams,
    tol: float = 1e-5,
    grid: Grid | None = None,
    order: int = 6,
) -> QuadratureConstants:
    """Fit (c1, c2) >= 0 so that the singular form reproduces the spectral form.

    The fit is a non-negative least-squares problem over Gaussians of widths
    0.5, 1 and 2; the spectral reference is padded to approximate the whole line.
    The returned ``residual`` is the relative L2 mismatch of the fit.
    """
    if not 1.0 < params.alpha < 2.0:
        raise ValueError("calibration requires 1 < alpha < 2")
    grid = grid or DEFAULT_CALIBRATION_GRID
    h = grid.dx
    truncation = 10.0 * grid.L
    cols, rhs = [], []
    for w in CALIBRATION_WIDTHS:
        g = grid.sample(lambda x: np.exp(-(x / w) ** 2))
        right = _one_sided(g.values, h, params.alpha, 0.0, 0.0, truncation, order)
        left = _one_sided(g.values[::-1], h, params.alpha, 0.0, 0.0, truncation, order)[::-1]
        ref = apply_spectral(params, g, pad=_REFERENCE_PAD).values
        scale = np.max(np.abs(ref))
        cols.append(np.stack([right, left], axis=1) / scale)
        rhs.append(ref / scale)
    A = np.concatenate(cols)
    b = np.concatenate(rhs)
    if params.theta == 0.0:
        # symmetric operator: a single shared weight
        c, _ = nnls(A.sum(axis=1, keepdims=True), b)
        c1 = c2 = float(c[0])
    else:
        c, _ = nnls(A, b)
        c1, c2 = float(c[0]), float(c[1])
    residual = float(np.linalg.norm(A @ np.array([c1, c2]) - b) / np.linalg.norm(b))
    if not residual < tol:
        raise RuntimeError(f"calibration residual {residual:.3e} exceeds tol {tol:.1e}")
    return QuadratureConstants(c1, c2, truncation, order * h, residual)
