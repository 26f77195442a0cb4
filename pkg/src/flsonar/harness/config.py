"""Experiment configuration and its TOML form.

One document, one section per module:

    [experiment]            kind, sweep values, runs, seed, beam modes
    [acoustics]             array layout, calibration (+ .environment, .sonar)
    [occupancy]             map prior, likelihood and propagation settings
    [decision]              (+ .loss, .actions)
    [worldsim]              (+ .world, .vehicle, .noise)

Every default is written out by ``dump_config`` so a saved file archives
the complete experiment.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import tomli
import tomli_w

from ..acoustics import KNOT
from ..errors import ConfigurationError
from ..worldsim import SimConfig

KINDS = ("density", "radius", "surge_error", "yaw_error", "altitude", "single_scenario")

DEFAULT_VALUES = {
    "density": (1, 3, 5, 10, 20, 30),  # obstacles
    "radius": (0.5, 1.0, 2.0, 3.0, 4.0),  # m
    "surge_error": (-2.5, 0.0, 2.5),  # knots
    "yaw_error": (0.0, 0.01),  # rad/s, per-step standard deviation
    "altitude": (3.0, 10.0, 25.0, 50.0),  # m above the seafloor
    "single_scenario": (60.0,),  # m to an obstacle dead ahead
}

UNITS = {
    "density": "obstacles",
    "radius": "m",
    "surge_error": "kn",
    "yaw_error": "rad/s",
    "altitude": "m",
    "single_scenario": "m",
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "density"
    values: tuple = ()
    runs: int = 200
    seed: int = 0
    beams: tuple = (1, 3)
    workers: int = 1
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"experiment.kind must be one of {KINDS}, got {self.kind!r}")
        values = tuple(self.values) if self.values else DEFAULT_VALUES[self.kind]
        object.__setattr__(self, "values", tuple(float(v) for v in values))
        object.__setattr__(self, "beams", tuple(int(b) for b in self.beams))
        if int(self.runs) != self.runs or self.runs < 1:
            raise ConfigurationError(f"experiment.runs must be a positive integer, got {self.runs}")
        if not self.beams or any(b not in (1, 3) for b in self.beams) or len(set(self.beams)) != len(self.beams):
            raise ConfigurationError(f"experiment.beams must be a nonempty subset of {{1, 3}}, got {self.beams}")
        if self.workers < 1:
            raise ConfigurationError(f"experiment.workers must be >= 1, got {self.workers}")
        if self.kind == "density" and any(v < 0 or v != int(v) for v in self.values):
            raise ConfigurationError("experiment.values for density must be non-negative integers")
        for v in self.values:
            self.point_config(v)

    def point_config(self, value: float) -> SimConfig:
        """Simulation config for one sweep point."""
        R = dataclasses.replace
        c = self.sim
        try:
            if self.kind == "density":
                return R(c, world=R(c.world, n_obstacles=int(value)))
            if self.kind == "radius":
                return R(c, world=R(c.world, obstacle_radius=float(value)))
            if self.kind == "surge_error":
                return R(c, noise=R(c.noise, surge_bias=float(value) * KNOT))
            if self.kind == "yaw_error":
                return R(c, noise=R(c.noise, yaw_std=float(value)))
            if self.kind == "altitude":
                env = c.acoustics.environment
                env = R(env, sonar_depth=env.seafloor_depth - float(value))
                return R(c, acoustics=R(c.acoustics, environment=env))
            return c
        except ConfigurationError as exc:
            raise ConfigurationError(f"experiment.values: {value} is invalid for {self.kind}: {exc}") from exc

    def digest(self) -> str:
        """Hash of everything that can change results (not the worker count)."""
        data = config_to_dict(self)
        del data["experiment"]["workers"]
        return hashlib.sha256(tomli_w.dumps(data).encode()).hexdigest()[:16]


# -- dataclass <-> plain dict ------------------------------------------------------


def _plain(value):
    if dataclasses.is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def _coerce(default, value, path):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{path} must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ConfigurationError(f"{path} must be an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{path} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"{path} must be a list, got {value!r}")
        if value and isinstance(value[0], (list, tuple)):
            return tuple(tuple(v) for v in value)
        return tuple(value)
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigurationError(f"{path} must be a string, got {value!r}")
    return value


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} must be a table")
    template = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigurationError(f"{path}: unknown field(s) {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = getattr(template, name)
        where = f"{path}.{name}"
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, where)
        else:
            kwargs[name] = _coerce(default, value, where)
    try:
        return cls(**kwargs)
    except ConfigurationError as exc:
        msg = str(exc)
        raise ConfigurationError(msg if msg.startswith(path) else f"{path}: {msg}") from exc


def config_to_dict(config: ExperimentConfig) -> dict:
    sim = config.sim
    return {
        "experiment": {
            "kind": config.kind,
            "values": list(config.values),
            "runs": config.runs,
            "seed": config.seed,
            "beams": list(config.beams),
            "workers": config.workers,
        },
        "acoustics": _plain(sim.acoustics),
        "occupancy": _plain(sim.occupancy),
        "decision": _plain(sim.decision),
        "worldsim": {"world": _plain(sim.world), "vehicle": _plain(sim.vehicle), "noise": _plain(sim.noise)},
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    known = {"experiment", "acoustics", "occupancy", "decision", "worldsim"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown section(s) {', '.join(unknown)}")
    base = SimConfig()
    worldsim = dict(data.get("worldsim", {}))
    extra = sorted(set(worldsim) - {"world", "vehicle", "noise"})
    if extra:
        raise ConfigurationError(f"worldsim: unknown field(s) {', '.join(extra)}")
    parts = {}
    for name, section, cls in (
        ("acoustics", data.get("acoustics"), type(base.acoustics)),
        ("occupancy", data.get("occupancy"), type(base.occupancy)),
        ("decision", data.get("decision"), type(base.decision)),
        ("world", worldsim.get("world"), type(base.world)),
        ("vehicle", worldsim.get("vehicle"), type(base.vehicle)),
        ("noise", worldsim.get("noise"), type(base.noise)),
    ):
        label = name if name in ("acoustics", "occupancy", "decision") else f"worldsim.{name}"
        parts[name] = _build(cls, section, label) if section is not None else getattr(base, name)
    try:
        sim = SimConfig(**parts)
    except ConfigurationError as exc:
        raise ConfigurationError(f"worldsim: {exc}") from exc

    exp = dict(data.get("experiment", {}))
    template = ExperimentConfig()
    allowed = {"kind", "values", "runs", "seed", "beams", "workers"}
    bad = sorted(set(exp) - allowed)
    if bad:
        raise ConfigurationError(f"experiment: unknown field(s) {', '.join(bad)}")
    kwargs = {}
    for key, value in exp.items():
        default = getattr(template, key)
        if key == "values":
            if not isinstance(value, list) or not value:
                raise ConfigurationError("experiment.values must be a nonempty list")
            kwargs[key] = tuple(_coerce(0.0, v, "experiment.values") for v in value)
        else:
            kwargs[key] = _coerce(default, value, f"experiment.{key}")
    return ExperimentConfig(sim=sim, **kwargs)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid TOML: {exc}") from exc
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(config: ExperimentConfig) -> str:
    return tomli_w.dumps(config_to_dict(config))


def save_config(config: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(dump_config(config))
    return path

