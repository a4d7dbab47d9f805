"""Run configuration: JSON files, built-in presets and per-key validation."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from .dynamics import BeliefInit, MegaConfig, ModelParams
from .spatial import PLACEMENTS, ConfigurationError, Domain, Triangle, domain_diameter, equilateral

LAMBDA_MODES = ("absolute", "diameter_fraction")


class ConfigError(ConfigurationError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class DomainSpec:
    triangles: list[list[float]] = field(default_factory=lambda: [equilateral().flat()])
    rates: list[float] | None = None


@dataclass
class BeliefSpec:
    centers: list[float] = field(default_factory=lambda: [-1.0, 1.0])
    probs: list[float] = field(default_factory=lambda: [0.5, 0.5])
    sigma: float = 0.5


@dataclass
class RunConfig:
    n: int | None = 1000
    lambda_mode: str = "diameter_fraction"
    lambda_value: float = 0.1
    gamma: float = 1.5
    delta: float = 8.0
    alpha: float = 2.0
    b: float = 1.5
    epsilon: float = 1.5
    p_L: float = 0.0
    p_R: float = 0.0
    mega_switching: bool = False
    abs_inside_window: bool = False
    unit_weights: bool = False
    placement: str = "triangle"
    max_steps: int = 200
    stop_threshold: float = 0.01
    window: int = 5
    domain: DomainSpec = field(default_factory=DomainSpec)
    beliefs: BeliefSpec = field(default_factory=BeliefSpec)
    seed: int = 0
    out: str = "runs"
    emit_edges: list[int] = field(default_factory=list)
    threads: int = 1

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def build_domain(self) -> Domain:
        tris = tuple(Triangle.from_flat(t) for t in self.domain.triangles)
        return Domain(tris, tuple(self.domain.rates or ()))

    def effective_lambda(self) -> float:
        if self.lambda_mode == "absolute":
            return float(self.lambda_value)
        return float(self.lambda_value) * domain_diameter(self.build_domain())

    def model_params(self) -> ModelParams:
        return ModelParams(
            domain=self.build_domain(),
            n=self.n,
            lam=self.effective_lambda(),
            gamma=self.gamma,
            delta=self.delta,
            alpha=self.alpha,
            b=self.b,
            beliefs=BeliefInit(tuple(self.beliefs.centers), tuple(self.beliefs.probs), self.beliefs.sigma),
            mega=MegaConfig(self.p_L, self.p_R, self.epsilon),
            mega_switching=self.mega_switching,
            abs_inside_window=self.abs_inside_window,
            unit_weights=self.unit_weights,
            placement=self.placement,
            max_steps=self.max_steps,
            stop_threshold=self.stop_threshold,
            window=self.window,
        )

    def validate(self) -> "RunConfig":
        _check_types(self)
        positive = ("lambda_value", "gamma", "epsilon", "stop_threshold")
        for key in positive:
            if not getattr(self, key) > 0:
                raise ConfigError(key, "must be > 0")
        for key in ("delta", "alpha", "b"):
            if not getattr(self, key) >= 0:
                raise ConfigError(key, "must be >= 0")
        for key in ("p_L", "p_R"):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ConfigError(key, "must lie in [0, 1]")
        if self.n is not None and self.n < 1:
            raise ConfigError("n", "must be >= 1 (or null for Poisson placement)")
        for key in ("max_steps", "window", "threads"):
            if getattr(self, key) < 1:
                raise ConfigError(key, "must be >= 1")
        if self.lambda_mode not in LAMBDA_MODES:
            raise ConfigError("lambda_mode", f"must be one of {LAMBDA_MODES}")
        if self.placement not in PLACEMENTS:
            raise ConfigError("placement", f"must be one of {PLACEMENTS}")
        if self.seed < 0:
            raise ConfigError("seed", "must be >= 0")
        if any(s < 0 for s in self.emit_edges):
            raise ConfigError("emit_edges", "steps must be >= 0")
        for label, check in (("domain", self.build_domain), ("beliefs", self._belief_init)):
            try:
                check()
            except ConfigurationError as exc:
                raise ConfigError(label, str(exc)) from None
        return self

    def _belief_init(self) -> BeliefInit:
        return BeliefInit(tuple(self.beliefs.centers), tuple(self.beliefs.probs), self.beliefs.sigma)


_NUMBER = (int, float)
_TYPES: dict[str, tuple] = {
    "n": (int, type(None)),
    "lambda_mode": (str,),
    "placement": (str,),
    "out": (str,),
    "mega_switching": (bool,),
    "abs_inside_window": (bool,),
    "unit_weights": (bool,),
    "max_steps": (int,),
    "window": (int,),
    "seed": (int,),
    "threads": (int,),
}


def _check_types(cfg: RunConfig) -> None:
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if f.name in ("domain", "beliefs", "emit_edges"):
            continue
        allowed = _TYPES.get(f.name, _NUMBER)
        # bool is an int subclass; only accept it where a bool is expected
        if isinstance(value, bool) and bool not in allowed:
            raise ConfigError(f.name, "must not be a boolean")
        if not isinstance(value, allowed):
            raise ConfigError(f.name, f"has the wrong type ({type(value).__name__})")
        if isinstance(value, float) and not math.isfinite(value):
            raise ConfigError(f.name, "must be finite")
    if not all(isinstance(s, int) and not isinstance(s, bool) for s in cfg.emit_edges):
        raise ConfigError("emit_edges", "must be a list of integers")


PRESETS: dict[str, dict[str, Any]] = {
    "paper-core": {
        "n": 1000,
        "lambda_mode": "diameter_fraction",
        "lambda_value": 0.1,
        "gamma": 1.5,
        "delta": 8.0,
        "alpha": 2.0,
        "b": 1.5,
        "epsilon": 1.5,
        "p_L": 0.0,
        "p_R": 0.0,
        "domain": {"triangles": [equilateral().flat()], "rates": None},
        "beliefs": {"centers": [-1.0, 1.0], "probs": [0.5, 0.5], "sigma": 0.5},
    },
}
PRESETS["paper-vaccine"] = copy.deepcopy(PRESETS["paper-core"]) | {
    "beliefs": {"centers": [-1.0, 1.0], "probs": [0.69, 0.31], "sigma": 0.5},
    "p_L": 0.35,
    "p_R": 0.75,
}

_NESTED = {"domain": DomainSpec, "beliefs": BeliefSpec}


def _merge(base: dict[str, Any], updates: Mapping[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in updates.items():
        if key in _NESTED and isinstance(value, Mapping):
            out[key] = {**out.get(key, {}), **value}
        else:
            out[key] = copy.deepcopy(value)
    return out


def from_dict(data: Mapping[str, Any]) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown configuration key")
    kwargs = dict(data)
    for key, cls in _NESTED.items():
        if key in kwargs:
            sub = kwargs[key]
            if not isinstance(sub, Mapping):
                raise ConfigError(key, "must be an object")
            sub_known = {f.name for f in fields(cls)}
            for sk in sub:
                if sk not in sub_known:
                    raise ConfigError(f"{key}.{sk}", "unknown configuration key")
            kwargs[key] = cls(**sub)
    if "emit_edges" in kwargs and isinstance(kwargs["emit_edges"], int):
        kwargs["emit_edges"] = [kwargs["emit_edges"]]
    return RunConfig(**kwargs).validate()


def load_config(
    path: str | Path | None = None,
    preset: str | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Resolve a config from preset, then file, then overrides (later wins).

    A file may name its own ``preset``; a run manifest written by the CLI is
    accepted too, in which case its resolved ``config`` section is used.
    """
    layers: list[Mapping[str, Any]] = []
    file_data: dict[str, Any] = {}
    if path is not None:
        try:
            file_data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"not valid JSON ({exc})") from None
        if not isinstance(file_data, dict):
            raise ConfigError(str(path), "top level must be an object")
        if "manifest_version" in file_data:
            file_data = dict(file_data["config"])
        preset = file_data.pop("preset", None) if preset is None else preset
        file_data.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        layers.append(PRESETS[preset])
    layers.append(file_data)
    layers.append(overrides or {})

    merged: dict[str, Any] = {}
    for layer in layers:
        merged = _merge(merged, layer)
    return from_dict(merged)
