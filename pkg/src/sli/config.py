"""Run configuration: INI-style text with sections, strict keys, full defaults.

An empty config is valid and yields the documented defaults (10 Er lattice,
Table-style hyperparameters per task).  Unknown sections or keys, malformed
values, and out-of-range values are rejected with the offending line number.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

from .dqn import Hyperparameters
from .lattice import LatticeConfig


@dataclass(frozen=True)
class SplitterSection:
    action_time: float = 0.25
    max_steps: int = 60
    threshold: float = 0.95


@dataclass(frozen=True)
class MirrorSection:
    max_half_cycles: int = 16
    threshold: float = 0.95


@dataclass(frozen=True)
class InterferometerSection:
    free_time: float = 10.0
    negate: str = "auto"   # auto -> calibrate at a = 0; or true / false
    free_chunk: float = 0.25


@dataclass(frozen=True)
class EstimationSection:
    grid_min: float = -0.01
    grid_max: float = 0.01
    grid_points: int = 401
    true_accel: float = -3e-4
    measurements: int = 10_000
    trials: int = 8
    bragg_time: float = 10.0
    workers: int = 0       # 0 -> one worker per available CPU, capped at 8


MIRROR_HYPER_DEFAULTS = Hyperparameters(
    discount=0.99,
    soft_update=0.99,
    learning_rate=0.001,
    episodes=8000,
    epsilon_decay=0.0005,
    hidden_size=128,
    batch_size=32,
)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    splitter: SplitterSection = field(default_factory=SplitterSection)
    mirror: MirrorSection = field(default_factory=MirrorSection)
    splitter_hyper: Hyperparameters = field(default_factory=Hyperparameters)
    mirror_hyper: Hyperparameters = field(default_factory=lambda: MIRROR_HYPER_DEFAULTS)
    interferometer: InterferometerSection = field(default_factory=InterferometerSection)
    estimation: EstimationSection = field(default_factory=EstimationSection)


class ConfigError(ValueError):
    pass


def _positive(x):
    return x > 0


def _nonnegative(x):
    return x >= 0


def _unit_interval(x):
    return 0.0 <= x <= 1.0


def _open_unit(x):
    return 0.0 < x < 1.0


# (python type, range predicate or None) per section.key
_SCHEMA = {
    "run": {"seed": (int, None)},
    "lattice": {
        "depth": (float, _positive),
        "n_max": (int, lambda v: v >= 8),
        "substeps": (int, lambda v: v >= 1),
        "accel": (float, None),
    },
    "splitter": {
        "action_time": (float, _positive),
        "max_steps": (int, lambda v: v >= 1),
        "threshold": (float, _open_unit),
    },
    "mirror": {
        "max_half_cycles": (int, lambda v: v >= 1),
        "threshold": (float, _open_unit),
    },
    "interferometer": {
        "free_time": (float, _nonnegative),
        "negate": (str, lambda v: v in ("auto", "true", "false")),
        "free_chunk": (float, _positive),
    },
    "estimation": {
        "grid_min": (float, None),
        "grid_max": (float, None),
        "grid_points": (int, lambda v: v >= 3),
        "true_accel": (float, None),
        "measurements": (int, lambda v: v >= 1),
        "trials": (int, lambda v: v >= 1),
        "bragg_time": (float, _positive),
        "workers": (int, _nonnegative),
    },
}

_HYPER_KEYS = {
    "discount": (float, _unit_interval),
    "soft_update": (float, _unit_interval),
    "learning_rate": (float, _positive),
    "episodes": (int, lambda v: v >= 1),
    "epsilon_decay": (float, _nonnegative),
    "hidden_size": (int, lambda v: v >= 1),
    "batch_size": (int, lambda v: v >= 1),
    "epsilon_floor": (float, _unit_interval),
    "buffer_capacity": (int, lambda v: v >= 1),
}
_SCHEMA["splitter_hyper"] = _HYPER_KEYS
_SCHEMA["mirror_hyper"] = _HYPER_KEYS


def _line_of(text: str, section: str, key: str | None = None) -> int:
    """Best-effort line number of a section header or a key assignment."""
    in_section = False
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            if key is None and stripped == f"[{section}]":
                return i
            in_section = stripped == f"[{section}]"
        elif key is not None and in_section:
            name = stripped.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return i
    return 0


def _coerce(section: str, key: str, raw: str, text: str):
    kind, check = _SCHEMA[section][key]
    line = _line_of(text, section, key)
    try:
        if kind is int:
            value = int(raw)
        elif kind is float:
            value = float(raw)
        else:
            value = raw.strip().lower()
    except ValueError:
        raise ConfigError(f"line {line}: {section}.{key}: cannot parse {raw!r} as {kind.__name__}")
    if check is not None and not check(value):
        raise ConfigError(f"line {line}: {section}.{key} = {raw} is out of range")
    return value


def parse_config(text: str) -> RunConfig:
    """Parse config text; omitted sections and keys take documented defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError(str(err)) from err

    values: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"line {_line_of(text, section)}: unknown section [{section}]")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"line {_line_of(text, section, key)}: unknown key {key!r} in [{section}]"
                )
            values[section][key] = _coerce(section, key, raw, text)

    est = values.get("estimation", {})
    lo = est.get("grid_min", EstimationSection.grid_min)
    hi = est.get("grid_max", EstimationSection.grid_max)
    if not lo < hi:
        line = _line_of(text, "estimation", "grid_min") or _line_of(text, "estimation", "grid_max")
        raise ConfigError(f"line {line}: estimation grid bounds must satisfy grid_min < grid_max")

    return RunConfig(
        seed=values.get("run", {}).get("seed", 0),
        lattice=LatticeConfig(**values.get("lattice", {})),
        splitter=SplitterSection(**values.get("splitter", {})),
        mirror=MirrorSection(**values.get("mirror", {})),
        splitter_hyper=Hyperparameters(**values.get("splitter_hyper", {})),
        mirror_hyper=Hyperparameters(
            **{**_as_dict(MIRROR_HYPER_DEFAULTS), **values.get("mirror_hyper", {})}
        ),
        interferometer=InterferometerSection(**values.get("interferometer", {})),
        estimation=EstimationSection(**values.get("estimation", {})),
    )


def _as_dict(hyper: Hyperparameters) -> dict:
    return {k: getattr(hyper, k) for k in _HYPER_KEYS}


def serialize_config(cfg: RunConfig) -> str:
    """Render every section and key; parse(serialize(cfg)) == cfg."""
    parser = configparser.ConfigParser(interpolation=None)
    parser["run"] = {"seed": repr(cfg.seed)}
    sections = {
        "lattice": cfg.lattice,
        "splitter": cfg.splitter,
        "mirror": cfg.mirror,
        "splitter_hyper": cfg.splitter_hyper,
        "mirror_hyper": cfg.mirror_hyper,
        "interferometer": cfg.interferometer,
        "estimation": cfg.estimation,
    }
    def fmt(value):
        return value if isinstance(value, str) else repr(value)

    for name, obj in sections.items():
        parser[name] = {key: fmt(getattr(obj, key)) for key in _SCHEMA[name]}
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()


def negate_policy(cfg: RunConfig) -> bool | None:
    """Interferometer negate flag: None requests a = 0 calibration."""
    return {"auto": None, "true": True, "false": False}[cfg.interferometer.negate]
