"""
Run configuration: one JSON document with pulse, target, model, saddle, tdse
and compare blocks. Presets for the figure workflows ship with the package.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .classifier import FilterThresholds
from .prefactors import PrefactorMode
from .pulse import OMEGA_NM, PulseParams
from .tdse import TdseConfig

PRESETS = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6")


class ConfigError(ValueError):
    pass


def _take(cls, data: dict | None, block: str):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown keys in '{block}': {sorted(extra)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{block}' block: {exc}") from exc


@dataclass
class PulseBlock:
    intensity: float | None = None      # W/cm²
    A0: float | None = None             # a.u.
    wavelength: float = 800.0           # nm
    cycles: float = 2.0
    cep: float = 0.0
    cep_grid: dict | list | None = None  # {"start", "stop", "count", "endpoint"} or explicit list

    def __post_init__(self):
        if (self.intensity is None) == (self.A0 is None):
            raise ConfigError("pulse: give exactly one of 'intensity' or 'A0'")
        if self.wavelength <= 0 or self.cycles <= 0:
            raise ConfigError("pulse: wavelength and cycles must be positive")
        if self.cep_grid is not None:
            c = self.ceps()
            if len(c) == 0:
                raise ConfigError("pulse: empty CEP grid")
            if np.any(np.diff(c) <= 0):
                raise ConfigError("pulse: CEP grid must be strictly increasing")

    def ceps(self) -> np.ndarray:
        g = self.cep_grid
        if g is None:
            return np.array([self.cep])
        if isinstance(g, list):
            return np.asarray(g, float)
        try:
            return np.linspace(float(g["start"]), float(g["stop"]), int(g["count"]),
                               endpoint=bool(g.get("endpoint", False)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"pulse: bad cep_grid {g!r}") from exc

    def pulse(self, cep: float | None = None) -> PulseParams:
        cep = self.cep if cep is None else cep
        if self.intensity is not None:
            return PulseParams.from_intensity(self.intensity, self.wavelength, self.cycles, cep)
        return PulseParams.from_cycles(self.A0, OMEGA_NM / self.wavelength, self.cycles, cep)


@dataclass
class TargetBlock:
    Z: float = 1.0
    Ip: float = 0.5
    n: list = field(default_factory=lambda: [5])
    ell: list | None = None

    def __post_init__(self):
        if not self.n:
            raise ConfigError("target: empty n list")
        if any(int(n) != n or n < 1 for n in self.n):
            raise ConfigError("target: n values must be positive integers")
        if self.ell is not None and any(int(l) != l or l < 0 for l in self.ell):
            raise ConfigError("target: ell values must be non-negative integers")
        if self.Z <= 0 or self.Ip <= 0:
            raise ConfigError("target: Z and Ip must be positive")


@dataclass
class ModelBlock:
    modes: list = field(default_factory=lambda: ["angular_only", "full_wavefunction"])
    pz_real_ratio: float = 0.1
    pz_max: float = 0.5
    diffusion: bool = True
    diffusion_time: str = "complex"
    incoherent: bool = False

    def __post_init__(self):
        try:
            self.modes = [PrefactorMode(m).value for m in self.modes]
        except ValueError as exc:
            raise ConfigError(f"model: {exc}") from exc
        if self.diffusion_time not in ("complex", "real"):
            raise ConfigError("model: diffusion_time must be 'complex' or 'real'")

    @property
    def thresholds(self) -> FilterThresholds:
        return FilterThresholds(self.pz_real_ratio, self.pz_max)


@dataclass
class SaddleBlock:
    ell_step: float = 0.02
    ell_stop: float | None = None       # default n - 1
    classes: list = field(default_factory=lambda: ["alpha", "beta", "gamma", "delta"])
    window: float = 0.2                 # cycles around the central peak
    trajectory_samples: int = 201
    trajectory_ells: list | None = None  # integer ℓ values with trajectory exports

    def __post_init__(self):
        if self.ell_step <= 0:
            raise ConfigError("saddle: ell_step must be positive")


@dataclass
class TdseBlock:
    r_max: float = 400.0
    n_grid: int = 16000
    ell_max: int = 30
    e_cut: float = 10.0
    dt: float = 0.02
    gauge: str = "length"
    continuum_mode: str = "full"
    gamma: float = 0.5
    n_report_max: int = 12
    modes: list = field(default_factory=lambda: ["full", "bound_only", "damped"])
    gammas: list = field(default_factory=lambda: [0.5])
    basis_cache: str | None = None

    def __post_init__(self):
        bad = set(self.modes) - {"full", "bound_only", "damped"}
        if bad:
            raise ConfigError(f"tdse: unknown modes {sorted(bad)}")
        self.config()

    def config(self, Z: float = 1.0, **changes) -> TdseConfig:
        kw = {f.name: getattr(self, f.name) for f in fields(TdseConfig) if f.name != "Z"}
        kw.update(changes, Z=Z)
        try:
            return TdseConfig(**kw)
        except ValueError as exc:
            raise ConfigError(f"tdse: {exc}") from exc


@dataclass
class CompareBlock:
    model: str | None = None
    tdse: str | None = None


@dataclass
class RunConfig:
    pulse: PulseBlock
    target: TargetBlock = field(default_factory=TargetBlock)
    model: ModelBlock = field(default_factory=ModelBlock)
    saddle: SaddleBlock = field(default_factory=SaddleBlock)
    tdse: TdseBlock = field(default_factory=TdseBlock)
    compare: CompareBlock = field(default_factory=CompareBlock)
    output: str = "out"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        extra = set(data) - {"pulse", "target", "model", "saddle", "tdse", "compare", "output", "description"}
        if extra:
            raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
        if "pulse" not in data:
            raise ConfigError("missing 'pulse' block")
        return cls(pulse=_take(PulseBlock, data["pulse"], "pulse"),
                   target=_take(TargetBlock, data.get("target"), "target"),
                   model=_take(ModelBlock, data.get("model"), "model"),
                   saddle=_take(SaddleBlock, data.get("saddle"), "saddle"),
                   tdse=_take(TdseBlock, data.get("tdse"), "tdse"),
                   compare=_take(CompareBlock, data.get("compare"), "compare"),
                   output=str(data.get("output", "out")))

    def to_dict(self) -> dict:
        return asdict(self)

    def tdse_config(self, **changes) -> TdseConfig:
        return self.tdse.config(Z=self.target.Z, **changes)


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(data)


def preset_dict(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("ftsfa").joinpath("presets", f"{name}.json").read_text()
    return json.loads(text)


def load_preset(name: str) -> RunConfig:
    return RunConfig.from_dict(preset_dict(name))
