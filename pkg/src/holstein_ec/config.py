"""Run configuration: YAML file blocks overridden by command-line flags."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .hamiltonian import LatticeSpec, coupling_lambda, g_for_lambda

METHODS = ("ec-exact", "ec-vqe", "oracle")
FORMATS = ("csv", "jsonl")


class ConfigError(ValueError):
    pass


@dataclass
class ModelConfig:
    num_sites: int = 100
    phonon_levels: int = 8
    omega: float = 0.5
    t: float = 1.0
    eps: float = 0.0
    g: float | None = None
    lam: float | None = None

    def resolved_g(self) -> float:
        if (self.g is None) == (self.lam is None):
            raise ConfigError("model needs exactly one of 'g' or 'lambda'")
        if self.g is not None:
            if self.g < 0:
                raise ConfigError(f"g must be >= 0, got {self.g}")
            return float(self.g)
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if not (self.t > 0 and self.omega > 0):
            raise ConfigError("t and omega must be positive")
        return g_for_lambda(self.lam, self.t, self.omega)

    def resolved_lambda(self) -> float:
        # always derived from g so that lambda- and g-specified runs agree bit for bit
        return coupling_lambda(self.resolved_g(), self.t, self.omega)

    def lattice(self) -> LatticeSpec:
        try:
            return LatticeSpec(self.num_sites, self.phonon_levels, self.omega,
                               self.resolved_g(), self.t, self.eps)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class MethodConfig:
    name: str = "ec-exact"
    segment_size: int = 2
    overlaps: bool = True
    s_cutoff: float = 1e-10
    tol: float = 1e-9
    max_iter: int = 5000
    krylov_dim: int = 64
    depth: int = 2
    reduced_ansatz: bool = False
    optimizer: str = "nelder-mead"
    restarts: int = 8
    max_evaluations: int = 20_000
    seed: int = 0


@dataclass
class SweepConfig:
    phonon_levels: list[int] = field(default_factory=list)
    lam: list[float] = field(default_factory=list)
    g: list[float] = field(default_factory=list)


@dataclass
class OutputConfig:
    path: str | None = None
    format: str = "csv"
    reference: str | None = None  # "strong-coupling" or a two-column (lambda, energy) file


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    method: MethodConfig = field(default_factory=MethodConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    threads: int = 1

    def validate(self) -> "RunConfig":
        m = self.method
        if m.name not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {m.name!r}")
        if self.output.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.output.format!r}")
        if m.segment_size < 1:
            raise ConfigError("segment_size must be >= 1")
        if m.segment_size > self.model.num_sites and m.name != "oracle":
            raise ConfigError(
                f"segment_size {m.segment_size} exceeds num_sites {self.model.num_sites}")
        if not m.overlaps and self.model.num_sites % m.segment_size and m.name != "oracle":
            raise ConfigError(
                f"{self.model.num_sites} sites are not divisible into segments of "
                f"{m.segment_size}; pass --overlaps or change the segment size")
        if m.optimizer not in ("nelder-mead", "parameter-shift", "none"):
            raise ConfigError(f"unknown optimizer {m.optimizer!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.sweep.lam and self.sweep.g:
            raise ConfigError("sweep over either lambda or g, not both")
        self.model.lattice()
        return self

    def grid(self) -> list["RunConfig"]:
        """One config per sweep point; phonon levels outer, coupling inner."""
        levels = self.sweep.phonon_levels or [self.model.phonon_levels]
        if self.sweep.lam:
            couplings = [("lam", v) for v in self.sweep.lam]
        elif self.sweep.g:
            couplings = [("g", v) for v in self.sweep.g]
        else:
            couplings = [(None, None)]
        points = []
        for npl in levels:
            for key, value in couplings:
                model = replace(self.model, phonon_levels=int(npl))
                if key == "lam":
                    model = replace(model, lam=float(value), g=None)
                elif key == "g":
                    model = replace(model, g=float(value), lam=None)
                points.append(replace(self, model=model, sweep=SweepConfig()))
        return points


_MODEL_KEYS = {"num_sites": "num_sites", "ns": "num_sites", "phonon_levels": "phonon_levels",
               "np": "phonon_levels", "omega": "omega", "t": "t", "hopping": "t", "eps": "eps",
               "onsite_energy": "eps", "g": "g", "lambda": "lam", "lam": "lam"}
_SWEEP_KEYS = {"phonon_levels": "phonon_levels", "np": "phonon_levels", "lambda": "lam",
               "lam": "lam", "g": "g"}


def _coerce(cls_field_type: Any, value: Any) -> Any:
    if value is None:
        return None
    text = str(cls_field_type)
    try:
        if "bool" in text:
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if text.startswith("int") or text == "<class 'int'>":
            return int(value)
        if "float" in text:
            return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cannot interpret {value!r} as {text}") from exc
    return value


def _apply(target: Any, values: dict, aliases: dict | None = None) -> None:
    fields = target.__dataclass_fields__
    for key, value in values.items():
        name = (aliases or {}).get(key, key)
        if name not in fields:
            raise ConfigError(f"unknown key {key!r} in {type(target).__name__}")
        ftype = fields[name].type
        if isinstance(value, list):
            inner = "int" if "int" in str(ftype) else "float"
            value = [int(v) if inner == "int" else float(v) for v in value]
        else:
            value = _coerce(ftype, value)
        setattr(target, name, value)


def load_config(path: str | Path | None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must be a mapping of blocks")
    unknown = set(data) - {"model", "method", "sweep", "output", "threads"}
    if unknown:
        raise ConfigError(f"unknown config blocks: {sorted(unknown)}")
    _apply(cfg.model, data.get("model") or {}, _MODEL_KEYS)
    _apply(cfg.method, data.get("method") or {}, {"final_layer_only": "reduced_ansatz"})
    _apply(cfg.sweep, data.get("sweep") or {}, _SWEEP_KEYS)
    _apply(cfg.output, data.get("output") or {})
    if "threads" in data:
        cfg.threads = int(data["threads"])
    return cfg
