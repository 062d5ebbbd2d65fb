"""Four-level double-Lambda configuration, units and Doppler frame shifts.

Frequencies are angular frequencies in units of the excited-state decay
rate Gamma and are stored as detunings from the crossover frequency
``omega_co = (omega_c + omega_d) / 2``.  Level ``a`` is the ground state
driven by the forward pump F; level ``b`` is the ground state driven by the
backward pump B and the probe P.  Both ground states sit at zero energy.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = [
    "ConfigError",
    "LevelScheme",
    "FieldSet",
    "RelaxationParams",
    "DopplerParams",
    "ModelConfig",
    "validate_config",
    "to_atomic_frame",
    "config_to_dict",
    "config_from_dict",
    "load_config",
    "dump_config",
    "config_hash",
    "default_config",
]


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants.

    ``problems`` holds one ``"field.path: message"`` string per violation.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class LevelScheme:
    omega_c: float = -14.5
    omega_d: float = 14.5
    delta_F: float = field(default=float("nan"))
    omega_co: float = field(default=float("nan"))
    sign_bc: int = 1
    sign_bd: int = -1

    def __post_init__(self):
        # derived fields always follow the level energies
        object.__setattr__(self, "delta_F", self.omega_d - self.omega_c)
        object.__setattr__(self, "omega_co", 0.5 * (self.omega_c + self.omega_d))

    @classmethod
    def from_splitting(cls, delta_F: float) -> "LevelScheme":
        """Symmetric scheme with the crossover at zero detuning."""
        return cls(omega_c=-0.5 * delta_F, omega_d=0.5 * delta_F)


@dataclass(frozen=True)
class FieldSet:
    omega_F: float = 0.0
    omega_B: float = 0.0
    omega_P: float = 0.0
    rabi_F: float = 0.01
    rabi_B: float = 0.01
    rabi_P: float = 0.001
    dir_F: int = 1
    dir_B: int = -1
    dir_P: int = 1

    def tuned(self, omega: float, probe_offset: float = 0.0) -> "FieldSet":
        """All beams at ``omega`` (pumps) and ``omega + probe_offset`` (probe)."""
        return dataclasses.replace(self, omega_F=omega, omega_B=omega,
                                   omega_P=omega + probe_offset)


@dataclass(frozen=True)
class RelaxationParams:
    gamma_e: float = 1.0
    gamma_g: float = 0.01
    branching: float = 0.5
    transit_feed: float | None = None

    def __post_init__(self):
        if self.transit_feed is None:
            object.__setattr__(self, "transit_feed", self.gamma_g)


@dataclass(frozen=True)
class DopplerParams:
    ku: float = 43.0
    n_nodes: int = 201


@dataclass(frozen=True)
class ModelConfig:
    levels: LevelScheme = field(default_factory=LevelScheme)
    fields: FieldSet = field(default_factory=FieldSet)
    relaxation: RelaxationParams = field(default_factory=RelaxationParams)
    doppler: DopplerParams = field(default_factory=DopplerParams)
    truncation: int = 3

    def with_fields(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, fields=dataclasses.replace(self.fields, **changes))

    def with_pumps(self, rabi: float, pump_ratio: float | None = None) -> "ModelConfig":
        """Set Omega_F = rabi and Omega_B = rabi * sqrt(pump_ratio) (ratio of powers)."""
        rabi_B = rabi if pump_ratio is None else rabi * math.sqrt(pump_ratio)
        return self.with_fields(rabi_F=rabi, rabi_B=rabi_B)

    def with_relaxation(self, **changes) -> "ModelConfig":
        """Replace relaxation rates; a transit feed that tracked gamma_g keeps tracking it."""
        rx = self.relaxation
        if "gamma_g" in changes and "transit_feed" not in changes and rx.transit_feed == rx.gamma_g:
            changes["transit_feed"] = None
        return dataclasses.replace(self, relaxation=dataclasses.replace(self.relaxation, **changes))

    def with_doppler(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, doppler=dataclasses.replace(self.doppler, **changes))


def default_config() -> ModelConfig:
    return ModelConfig()


def _finite(x) -> bool:
    try:
        return math.isfinite(float(x))
    except (TypeError, ValueError):
        return False


def validate_config(config: ModelConfig) -> ModelConfig:
    """Check every invariant of ``config`` and return it with derived fields refreshed.

    All violations are collected and raised together as a :class:`ConfigError`.
    A probe Rabi frequency above the forward-pump one only triggers a warning,
    since the first-order probe treatment is then outside its validity range.
    """
    problems = []
    lv, fs, rx, dp = config.levels, config.fields, config.relaxation, config.doppler

    numeric = {
        "levels.omega_c": lv.omega_c, "levels.omega_d": lv.omega_d,
        "fields.omega_F": fs.omega_F, "fields.omega_B": fs.omega_B,
        "fields.omega_P": fs.omega_P, "fields.rabi_F": fs.rabi_F,
        "fields.rabi_B": fs.rabi_B, "fields.rabi_P": fs.rabi_P,
        "relaxation.gamma_e": rx.gamma_e, "relaxation.gamma_g": rx.gamma_g,
        "relaxation.branching": rx.branching,
        "relaxation.transit_feed": rx.transit_feed, "doppler.ku": dp.ku,
    }
    bad = {k for k, v in numeric.items() if not _finite(v)}
    problems += [f"{k}: must be a finite number" for k in sorted(bad)]

    if not bad & {"levels.omega_c", "levels.omega_d"} and not lv.omega_d - lv.omega_c > 0:
        problems.append("levels.delta_F: delta_F > 0 required (omega_d must exceed omega_c)")
    if lv.sign_bc != 1:
        problems.append("levels.sign_bc: must be +1")
    if lv.sign_bd != -1:
        problems.append("levels.sign_bd: must be -1")
    for name in ("rabi_F", "rabi_B", "rabi_P"):
        if f"fields.{name}" not in bad and getattr(fs, name) < 0:
            problems.append(f"fields.{name}: must be >= 0")
    if (fs.dir_F, fs.dir_B, fs.dir_P) != (1, -1, 1):
        problems.append("fields.dir_*: propagation signs are fixed to dir_F=+1, dir_B=-1, dir_P=+1")
    if rx.gamma_e != 1.0 and "relaxation.gamma_e" not in bad:
        problems.append("relaxation.gamma_e: is the frequency unit and must equal 1")
    if "relaxation.gamma_g" not in bad and not rx.gamma_g > 0:
        problems.append("relaxation.gamma_g: gamma_g must be > 0")
    if rx.branching != 0.5 and "relaxation.branching" not in bad:
        problems.append("relaxation.branching: must equal 1/2")
    if "relaxation.transit_feed" not in bad and rx.transit_feed < 0:
        problems.append("relaxation.transit_feed: must be >= 0")
    if "doppler.ku" not in bad and dp.ku < 0:
        problems.append("doppler.ku: must be >= 0")
    if not isinstance(dp.n_nodes, (int, np.integer)) or dp.n_nodes < 1 or dp.n_nodes % 2 == 0:
        problems.append("doppler.n_nodes: must be an odd positive integer")
    if not isinstance(config.truncation, (int, np.integer)) or config.truncation < 1:
        problems.append("truncation: must be an integer >= 1")

    if problems:
        raise ConfigError(problems)
    if fs.rabi_P > fs.rabi_F:
        warnings.warn("rabi_P exceeds rabi_F; first-order probe treatment may be inaccurate",
                      stacklevel=2)
    return dataclasses.replace(config, levels=LevelScheme(lv.omega_c, lv.omega_d))


def to_atomic_frame(fields: FieldSet, v, ku: float):
    """Doppler-shifted (omega_F, omega_B, omega_P) seen by atoms at velocity ``v``.

    ``v`` is in units of the most-probable speed and may be an array; each
    beam is shifted by ``-dir * ku * v``.
    """
    kv = ku * np.asarray(v, dtype=float)
    if kv.ndim == 0:
        kv = float(kv)
    return (fields.omega_F - fields.dir_F * kv,
            fields.omega_B - fields.dir_B * kv,
            fields.omega_P - fields.dir_P * kv)


# -- JSON -------------------------------------------------------------------

_SECTIONS = {
    "levels": LevelScheme,
    "fields": FieldSet,
    "relaxation": RelaxationParams,
    "doppler": DopplerParams,
}


def config_to_dict(config: ModelConfig) -> dict[str, Any]:
    return dataclasses.asdict(config)


def config_from_dict(data: dict[str, Any]) -> ModelConfig:
    """Build a config from a JSON-like mapping; unknown keys are rejected.

    Missing keys fall back to the defaults.  The derived ``delta_F`` and
    ``omega_co`` entries are accepted but recomputed from the level energies.
    """
    if not isinstance(data, dict):
        raise ConfigError(["<root>: expected a JSON object"])
    problems = [f"{k}: unknown key" for k in data if k not in (*_SECTIONS, "truncation")]
    kwargs: dict[str, Any] = {}
    for section, cls in _SECTIONS.items():
        if section not in data:
            continue
        sub = data[section]
        if not isinstance(sub, dict):
            problems.append(f"{section}: expected an object")
            continue
        names = {f.name for f in dataclasses.fields(cls)}
        problems += [f"{section}.{k}: unknown key" for k in sub if k not in names]
        known = {k: v for k, v in sub.items() if k in names}
        if cls is LevelScheme:
            known.pop("delta_F", None)
            known.pop("omega_co", None)
        try:
            kwargs[section] = cls(**known)
        except TypeError as exc:
            problems.append(f"{section}: {exc}")
    if "truncation" in data:
        kwargs["truncation"] = data["truncation"]
    if problems:
        raise ConfigError(problems)
    return ModelConfig(**kwargs)


def load_config(path) -> ModelConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return validate_config(config_from_dict(data))


def dump_config(config: ModelConfig, path=None, indent: int = 2) -> str:
    text = json.dumps(config_to_dict(config), indent=indent, sort_keys=True)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text


def config_hash(config: ModelConfig) -> str:
    """Stable 16-hex-digit digest of the resolved config."""
    canon = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
