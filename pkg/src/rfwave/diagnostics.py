"""Norms, energy bookkeeping, functional inequalities and decay fits."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .grid import Grid, GridFunction, ramp, spectral_derivative
from .operator import QuadratureConstants, RieszFellerParams, apply_singular

if TYPE_CHECKING:
    from .profile import FluxFunction, Profile, WaveData

INEQUALITY_SLACK = 1e-12
CONVEXITY_SLACK = 1e-6


# ---------------------------------------------------------------- norms

def _vals(f) -> np.ndarray:
    return f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)


def lp_norm(f: GridFunction, p: float) -> float:
    v = _vals(f)
    if math.isinf(p):
        return float(np.max(np.abs(v)))
    return float((np.sum(np.abs(v) ** p) * f.grid.dx) ** (1.0 / p))


def _mode_weights(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """|k| on rfft modes and the multiplicity of each mode in the full spectrum."""
    k = np.abs(np.asarray(grid.k_half))
    mult = np.full(k.size, 2.0)
    mult[0] = 1.0
    mult[-1] = 1.0
    return k, mult


def _power(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Per-mode contribution to the squared L2 norm (discrete Plancherel)."""
    _, mult = _mode_weights(grid)
    return mult * np.abs(np.fft.rfft(values)) ** 2 * grid.dx / grid.N


def sobolev_seminorm(f: GridFunction, sigma: float) -> float:
    """Homogeneous norm (sum |k|^(2 sigma) |f^(k)|^2)^(1/2) with Plancherel scaling."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    k, _ = _mode_weights(f.grid)
    w = k ** (2 * sigma) if sigma > 0 else np.ones_like(k)
    return float(math.sqrt(np.sum(w * _power(f.values, f.grid))))


def sobolev_norm(f: GridFunction, sigma: float) -> float:
    """Inhomogeneous norm with weight (1 + k^2)^sigma."""
    k, _ = _mode_weights(f.grid)
    return float(math.sqrt(np.sum((1 + k**2) ** sigma * _power(f.values, f.grid))))


# ---------------------------------------------------------------- inequalities

def dilate(f: GridFunction, lam: float) -> GridFunction:
    """x -> f(lam x) on the torus of half-width L/lam; same samples, exact scaling."""
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    return GridFunction(Grid(f.grid.L / lam, f.grid.N), f.values)


def interpolation_gap(f: GridFunction, sigma: float, epsilon: float) -> float:
    """eps^(sigma-2) |v|^2_{sigma/2} + eps^sigma |v|^2_{sigma/2+1} - |v|^2_1, summed per mode."""
    if not 0 <= sigma <= 2:
        raise ValueError("need 0 <= sigma <= 2")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    k, _ = _mode_weights(f.grid)
    per_mode = epsilon ** (sigma - 2) * k**sigma + epsilon**sigma * k ** (sigma + 2) - k**2
    return float(np.sum(per_mode * _power(f.values, f.grid)))


def _reject_zero(f: GridFunction) -> None:
    if not np.any(f.values):
        raise ValueError("function is identically zero")


def nash_constant(sigma: float) -> float:
    """C_sigma = 2 sigma ((1 + 2 sigma)/(2 sigma))^(1 + 2 sigma) / pi^(2 sigma), from Fourier splitting."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return 2 * sigma * ((1 + 2 * sigma) / (2 * sigma)) ** (1 + 2 * sigma) / math.pi ** (2 * sigma)


def nash_ratio(f: GridFunction, sigma: float) -> float:
    """||v||_2^(2(1+2 sigma)) / (||v||_1^(4 sigma) |v|^2_{H^sigma})."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    _reject_zero(f)
    l2 = lp_norm(f, 2)
    l1 = lp_norm(f, 1)
    hs = sobolev_seminorm(f, sigma)
    # logs keep the high powers in range
    return float(math.exp(2 * (1 + 2 * sigma) * math.log(l2) - 4 * sigma * math.log(l1) - 2 * math.log(hs)))


def nash_gap(f: GridFunction, sigma: float) -> float:
    """Relative slack 1 - ratio / C_sigma."""
    return 1.0 - nash_ratio(f, sigma) / nash_constant(sigma)


def gn_constant(grid: Grid, sigma: float) -> float:
    """Grid constant K with ||v||_inf <= K ||v||_{H^sigma}, so ||v||_3^3 <= K ||v||_2 ||v||^2_{H^sigma}."""
    k, mult = _mode_weights(grid)
    return float(math.sqrt(np.sum(mult * (1 + k**2) ** (-sigma)) / (2 * grid.L)))


def _check_gn_sigma(sigma: float) -> None:
    if not sigma > 0.25:
        raise ValueError(f"need sigma > 1/4, got {sigma}")


def gn_ratio(f: GridFunction, sigma: float) -> float:
    """||v||_3^3 / (||v||_2 ||v||^2_{H^sigma})."""
    _check_gn_sigma(sigma)
    _reject_zero(f)
    return lp_norm(f, 3) ** 3 / (lp_norm(f, 2) * sobolev_norm(f, sigma) ** 2)


def gn_gap(f: GridFunction, sigma: float) -> float:
    """Relative slack 1 - ratio / K."""
    return 1.0 - gn_ratio(f, sigma) / gn_constant(f.grid, sigma)


@dataclass(frozen=True)
class Entropy:
    name: str

    def eta(self, u):
        return {"linear": lambda v: 2.0 + 3.0 * v, "square": lambda v: v**2, "exp": np.exp,
                "smooth_abs": lambda v: np.sqrt(v**2 + 0.01)}[self.name](u)

    def deta(self, u):
        return {"linear": lambda v: 3.0 + 0 * v, "square": lambda v: 2 * v, "exp": np.exp,
                "smooth_abs": lambda v: v / np.sqrt(v**2 + 0.01)}[self.name](u)


ENTROPIES = ("square", "exp", "smooth_abs")


def convexity_gap(params: RieszFellerParams, consts: QuadratureConstants, u: GridFunction,
                  eta_kind: str, u_left: float, u_right: float) -> GridFunction:
    """Pointwise D eta(u) - eta'(u) D u, both via the singular-integral form."""
    e = Entropy(eta_kind)
    eu = GridFunction(u.grid, e.eta(u.values))
    d_eta = apply_singular(params, consts, eu, float(e.eta(u_left)), float(e.eta(u_right)))
    d_u = apply_singular(params, consts, u, u_left, u_right)
    return GridFunction(u.grid, d_eta.values - e.deta(u.values) * d_u.values)


def zero_integral_gap(params: RieszFellerParams, consts: QuadratureConstants, v: GridFunction,
                      v_left: float, v_right: float) -> float:
    """|int D v| over the line: trapezoid over the sampled window [a, b] plus the exterior.

    Outside [a, b] the field is taken equal to its limits, so D v there only
    sees the window through the kernel. Integrating in x gives
    c2 int_{-inf}^{b} (v - v_R)(b - y)^(-alpha)/alpha dy to the right of b and
    c1 int_{a}^{inf} (v - v_L)(y - a)^(-alpha)/alpha dy to the left of a.
    """
    grid = v.grid
    al = params.alpha
    x = np.asarray(grid.x)
    dx = grid.dx
    a, b = x[0], x[-1]
    trap = np.full(x.size, dx)
    trap[0] = trap[-1] = dx / 2
    d = apply_singular(params, consts, v, v_left, v_right).values
    inner = float(np.sum(trap * d))
    vals = v.values
    outer = (b - a) ** (1 - al) / (al * (al - 1))
    # singular endpoints carry (v - limit) = 0 and are dropped
    right = np.sum(trap[:-1] * (vals[:-1] - v_right) * (b - x[:-1]) ** (-al)) / al
    right += (v_left - v_right) * outer
    left = np.sum(trap[1:] * (vals[1:] - v_left) * (x[1:] - a) ** (-al)) / al
    left += (v_right - v_left) * outer
    return float(abs(inner + consts.c2 * right + consts.c1 * left))


# ---------------------------------------------------------------- trajectories

@dataclass(frozen=True)
class DiagnosticRecord:
    W_L1: float
    W_L2: float
    W_Linf: float
    U_L1: float
    U_L2: float
    U_Linf: float
    W_Hdot: float
    U_Hdot: float
    W_H1: float
    W_H2: float
    cross_term: float
    energy: float
    dissipation: float
    u_min: float
    u_max: float

    def __post_init__(self) -> None:
        for k, v in asdict(self).items():
            if not math.isfinite(v):
                raise ValueError(f"non-finite diagnostic {k}")


def profile_slope(profile: "Profile") -> np.ndarray:
    grid, wave = profile.grid, profile.wave
    q = profile.ubar.values - ramp(grid, wave.u_minus, wave.u_plus)
    return spectral_derivative(q, grid) + (wave.u_plus - wave.u_minus) / (2 * grid.L)


def make_record(params: RieszFellerParams, profile: "Profile", f: "FluxFunction",
                W: np.ndarray, U: np.ndarray) -> DiagnosticRecord:
    """Norms and energy terms of one (W, U) snapshot.

    Energy and dissipation use unit weights on the U and dU/dxi terms.
    """
    grid = profile.grid
    Wg, Ug = GridFunction(grid, W), GridFunction(grid, U)
    Ux = GridFunction(grid, spectral_derivative(U, grid))
    s = params.alpha / 2
    w2, u2, ux2 = lp_norm(Wg, 2), lp_norm(Ug, 2), lp_norm(Ux, 2)
    wh, uh, uxh = sobolev_seminorm(Wg, s), sobolev_seminorm(Ug, s), sobolev_seminorm(Ux, s)
    ub = profile.ubar.values
    cross = float(np.sum(f.d2f(ub) * profile_slope(profile) * W**2) * grid.dx)
    u = ub + U
    return DiagnosticRecord(
        W_L1=lp_norm(Wg, 1), W_L2=w2, W_Linf=lp_norm(Wg, math.inf),
        U_L1=lp_norm(Ug, 1), U_L2=u2, U_Linf=lp_norm(Ug, math.inf),
        W_Hdot=wh, U_Hdot=uh,
        W_H1=math.sqrt(w2**2 + u2**2), W_H2=math.sqrt(w2**2 + u2**2 + ux2**2),
        cross_term=cross,
        energy=w2**2 + u2**2 + ux2**2, dissipation=wh**2 + uh**2 + uxh**2,
        u_min=float(u.min()), u_max=float(u.max()),
    )


@dataclass(frozen=True)
class Snapshot:
    t: float
    W: GridFunction = field(repr=False)
    U: GridFunction = field(repr=False)
    record: DiagnosticRecord = field(repr=False)


@dataclass
class Trajectory:
    params: RieszFellerParams
    wave: "WaveData"
    flux_name: str
    grid: Grid
    snapshots: list[Snapshot] = field(default_factory=list, repr=False)
    boundary_amplitude: float = 0.0
    boundary_flag: bool = False

    def append(self, t: float, W: GridFunction, U: GridFunction, record: DiagnosticRecord) -> None:
        if self.snapshots and not t > self.snapshots[-1].t:
            raise ValueError("snapshot times must be strictly increasing")
        if W.grid != self.grid or U.grid != self.grid:
            raise ValueError("snapshot grid differs from trajectory grid")
        self.snapshots.append(Snapshot(float(t), W, U, record))

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def series(self, key: str) -> np.ndarray:
        return np.array([getattr(s.record, key) for s in self.snapshots])

    def __len__(self) -> int:
        return len(self.snapshots)


@dataclass(frozen=True)
class LedgerRow:
    t: float
    H1: float
    energy: float
    energy_sup: float
    cumulative_dissipation: float
    cumulative_cross: float
    cross_increment: float
    flagged: bool


def energy_ledger(traj: Trajectory, small_data: bool = True, rel_tol: float = 1e-8) -> list[LedgerRow]:
    """Running energy sup, time-integrated dissipation and cross term (trapezoid),
    with a flag wherever ||W||_{H1} exceeds its initial value by more than ``rel_tol``."""
    if not traj.snapshots:
        raise ValueError("empty trajectory")
    t = traj.times
    h1 = traj.series("W_H1")
    en = traj.series("energy")
    dis = traj.series("dissipation")
    cr = traj.series("cross_term")
    rows = []
    sup = cum_d = cum_c = 0.0
    for i in range(t.size):
        inc = 0.0
        if i:
            dt = t[i] - t[i - 1]
            cum_d += 0.5 * dt * (dis[i] + dis[i - 1])
            inc = 0.5 * dt * (cr[i] + cr[i - 1])
            cum_c += inc
        sup = max(sup, en[i])
        flagged = small_data and h1[i] > h1[0] * (1 + rel_tol)
        rows.append(LedgerRow(t[i], h1[i], en[i], sup, cum_d, cum_c, inc, bool(flagged)))
    return rows


def fit_power_law(times: Sequence[float], values: Sequence[float], alpha: float,
                  t_min: float = 10.0, t_max: float | None = None,
                  min_points: int = 8) -> tuple[float, float]:
    """Slope of log(value) against log(1 + t) and sup of value (1 + t)^(1/(2 alpha)) on the window."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = t >= t_min
    if t_max is not None:
        sel &= t <= t_max
    if sel.sum() < min_points:
        raise ValueError(f"need at least {min_points} samples in the window, got {int(sel.sum())}")
    if np.any(v[sel] <= 0):
        raise ValueError("norms must be positive in the fit window")
    slope = np.polyfit(np.log1p(t[sel]), np.log(v[sel]), 1)[0]
    amp = np.max(v[sel] * (1 + t[sel]) ** (1 / (2 * alpha)))
    return float(slope), float(amp)


def fit_decay_rate(traj: Trajectory, norm_key: str = "U_L2", t_min: float = 10.0,
                   t_max: float | None = None) -> tuple[float, float]:
    return fit_power_law(traj.times, traj.series(norm_key), traj.params.alpha, t_min, t_max)


def nested_window_constants(traj: Trajectory, norm_key: str = "U_L2",
                            t_min: float = 10.0) -> tuple[float, float]:
    """Bound-constant estimate on [t_min, T/2] and on [t_min, T]."""
    T = float(traj.times[-1])
    _, half = fit_decay_rate(traj, norm_key, t_min, T / 2)
    _, full = fit_decay_rate(traj, norm_key, t_min, T)
    return half, full


# ---------------------------------------------------------------- output

TRAJECTORY_COLUMNS = ("t", "L1", "L2", "Linf", "H1", "Hdot_alpha_half", "energy", "dissipation", "cross_term")


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    """One row per snapshot; L1/L2/Linf are norms of U, H1 and Hdot of W."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for s in traj.snapshots:
            r = s.record
            w.writerow([repr(float(v)) for v in (s.t, r.U_L1, r.U_L2, r.U_Linf, r.W_H1, r.W_Hdot,
                                                 r.energy, r.dissipation, r.cross_term)])


def write_snapshot_csv(traj: Trajectory, index: int, path: str | Path) -> None:
    s = traj.snapshots[index]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xi", "W", "U"])
        for row in zip(traj.grid.x, s.W.values, s.U.values):
            w.writerow([repr(float(v)) for v in row])


def write_ledger_csv(rows: Sequence[LedgerRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        names = list(LedgerRow.__dataclass_fields__)
        w.writerow(names)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else int(v) for v in (getattr(r, n) for n in names)])


def write_json(payload: dict, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def gnuplot_script(csv_files: Sequence[str], labels: Sequence[str], column: str = "L2",
                   output: str = "decay.png", title: str = "perturbation norm") -> str:
    """Log-log plot of one trajectory column against 1 + t for several runs."""
    col = TRAJECTORY_COLUMNS.index(column) + 1
    lines = [
        "set datafile separator ','",
        "set logscale xy",
        "set key top right",
        "set xlabel '1 + t'",
        f"set ylabel '{column}'",
        f"set title '{title}'",
        "set terminal pngcairo size 900,600",
        f"set output '{output}'",
    ]
    parts = [f"'{c}' every ::1 using (1+$1):{col} with lines title '{lab}'"
             for c, lab in zip(csv_files, labels)]
    lines.append("plot " + ", \\\n     ".join(parts))
    return "\n".join(lines) + "\n"
