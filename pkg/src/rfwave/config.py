"""Strict INI experiment configuration."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .grid import Grid
from .operator import RieszFellerParams
from .profile import FluxFunction, WaveData


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OperatorSection:
    alpha: float = 2.0
    theta: float = 0.0


@dataclass(frozen=True)
class FluxSection:
    preset: str = "burgers"
    coefficients: tuple[float, ...] = ()


@dataclass(frozen=True)
class WaveSection:
    u_minus: float = 1.0
    u_plus: float = 0.0


@dataclass(frozen=True)
class GridSection:
    L: float | None = None
    N: int | None = None


@dataclass(frozen=True)
class EvolutionSection:
    dt: float | None = None
    T: float | None = None
    record_every: int | None = None
    scheme: str = "ETD2RK"
    dealias: bool = True


@dataclass(frozen=True)
class PerturbationSection:
    shape: str = "gaussian"
    amplitude: float = 0.05
    width: float = 2.0
    center: float = 0.0
    file: str = ""
    # second datum for the L1 contraction pairing; 0 disables it
    pair_amplitude: float = 0.0
    pair_center: float = 0.0


@dataclass(frozen=True)
class GreenSection:
    times: tuple[float, ...] = (0.1, 1.0, 10.0)


@dataclass(frozen=True)
class SweepSection:
    alphas: tuple[float, ...] = ()
    amplitudes: tuple[float, ...] = ()
    seed: int = 0


@dataclass(frozen=True)
class IneqSection:
    family_size: int = 200
    bandwidth: float = 4.0
    gn_sigmas: tuple[float, ...] = (0.5, 0.75, 1.0)
    nash_sigmas: tuple[float, ...] = (0.5, 0.75, 1.0)
    interp_sigmas: tuple[float, ...] = (0.0, 0.5, 1.0, 1.5, 2.0)
    epsilons: tuple[float, ...] = (0.25, 1.0, 4.0)


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    profile_file: str = ""


@dataclass(frozen=True)
class ExperimentConfig:
    operator: OperatorSection = field(default_factory=OperatorSection)
    flux: FluxSection = field(default_factory=FluxSection)
    wave: WaveSection = field(default_factory=WaveSection)
    grid: GridSection = field(default_factory=GridSection)
    evolution: EvolutionSection = field(default_factory=EvolutionSection)
    perturbation: PerturbationSection = field(default_factory=PerturbationSection)
    green: GreenSection = field(default_factory=GreenSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    ineq: IneqSection = field(default_factory=IneqSection)
    output: OutputSection = field(default_factory=OutputSection)

    def __post_init__(self) -> None:
        self.params()
        self.wave_data()
        if self.grid.L is not None or self.grid.N is not None:
            if self.grid.L is None or self.grid.N is None:
                raise ConfigError("[grid] needs both L and N")
            Grid(self.grid.L, self.grid.N)
        if self.perturbation.shape not in ("gaussian", "dipole", "file", "none"):
            raise ConfigError(f"unknown perturbation shape {self.perturbation.shape!r}")
        if self.perturbation.shape == "file" and not self.perturbation.file:
            raise ConfigError("perturbation shape 'file' needs a file path")
        if self.evolution.scheme not in ("ETD1", "ETD2RK"):
            raise ConfigError(f"unknown scheme {self.evolution.scheme!r}")
        if self.ineq.family_size < 1:
            raise ConfigError("ineq family_size must be positive")
        if self.evolution.T is not None and not self.evolution.T > 0:
            raise ConfigError("evolution T must be positive")
        if self.evolution.dt is not None and not self.evolution.dt > 0:
            raise ConfigError("evolution dt must be positive")
        if any(a < 0 for a in self.sweep.amplitudes):
            raise ConfigError("sweep amplitudes must be non-negative")
        for a in self.sweep.alphas:
            RieszFellerParams(a, 0.0).require_evolution()

    def params(self) -> RieszFellerParams:
        try:
            return RieszFellerParams(self.operator.alpha, self.operator.theta)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def flux_function(self) -> FluxFunction:
        if self.flux.preset == "burgers":
            if self.flux.coefficients:
                raise ConfigError("burgers preset takes no coefficients")
            return FluxFunction.burgers()
        if self.flux.preset == "polynomial":
            return FluxFunction.polynomial(self.flux.coefficients)
        raise ConfigError(f"unknown flux preset {self.flux.preset!r}")

    def wave_data(self) -> WaveData:
        f = self.flux_function()
        try:
            wave = WaveData.from_flux(f, self.wave.u_minus, self.wave.u_plus)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if not f.is_convex_on(wave.u_plus, wave.u_minus):
            raise ConfigError("flux is not convex on the wave range")
        return wave

    def grid_or(self, default: Grid) -> Grid:
        if self.grid.L is None:
            return default
        return Grid(self.grid.L, self.grid.N)

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        """SHA-256 of the canonical JSON form, excluding the output location."""
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_SECTIONS = {f.name: f.type for f in fields(ExperimentConfig)}


def _section_class(name: str):
    return {
        "operator": OperatorSection, "flux": FluxSection, "wave": WaveSection, "grid": GridSection,
        "evolution": EvolutionSection, "perturbation": PerturbationSection, "green": GreenSection,
        "sweep": SweepSection, "ineq": IneqSection, "output": OutputSection,
    }[name]


def _parse_value(raw: str, annotation: str, where: str):
    raw = raw.strip()
    try:
        if annotation.startswith("tuple"):
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if annotation == "bool":
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if annotation.startswith("int"):
            return int(raw)
        if annotation.startswith("float"):
            return float(raw)
        return raw
    except ValueError as e:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {annotation}") from e


def config_from_text(text: str) -> ExperimentConfig:
    """Parse INI text; unknown sections or keys are errors."""
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=(";",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from e
    kwargs = {}
    for name in cp.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        cls = _section_class(name)
        known = {f.name: f.type for f in fields(cls)}
        vals = {}
        for key, raw in cp.items(name):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            vals[key] = _parse_value(raw, str(known[key]), f"[{name}] {key}")
        if name == "flux" and "coefficients" in vals:
            vals["coefficients"] = tuple(vals["coefficients"])
        if name == "sweep" and "seed" in vals:
            vals["seed"] = int(vals["seed"])
        kwargs[name] = cls(**vals)
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from e


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return config_from_text(Path(path).read_text())
