"""Scan configuration: per-experiment defaults, TOML file overlay, flag overrides, validation."""

from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .adiabatic import HALF, SPLITS
from .errors import ConfigError
from .models import MAX_ED_QUBITS

EXPERIMENTS = ("ssh_scan", "heisenberg_scan", "finite_size", "energy_check", "parity_check")
READOUTS = ("analytic", "shots", "ipea")
_READOUT_ALIASES = {"hadamard_shots": "shots"}
MAX_R_ITERATIONS = 16


@dataclass
class ModelConfig:
    v_over_w: list[float] = field(default_factory=lambda: [0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0])
    w: float = 1.0
    n_spins: list[int] = field(default_factory=lambda: [4])
    J: float = 1.0
    deltas: list[float] = field(default_factory=lambda: [-0.5, -0.4, -0.3, -0.2, -0.1, 0.1, 0.2, 0.3, 0.4, 0.5])
    twisted_bond: int | None = None
    boundary: str = "PBC"


@dataclass
class ScheduleConfig:
    n_steps: int = 100
    dt: float | str = 0.5
    n_trotter: int = 10
    split: str = HALF
    trotter_tolerance: float = 0.1
    min_fidelity: float = 0.99


@dataclass
class ScanConfig:
    experiment: str
    model: ModelConfig = field(default_factory=ModelConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    readout: str = "analytic"
    shots: int = 8192
    r_iterations: int = 4
    seed: int = 0
    output_path: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        """Short SHA-256 of the resolved config, ignoring where output goes."""
        d = self.to_dict()
        d.pop("output_path")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def default_config(experiment: str) -> ScanConfig:
    experiment = experiment.replace("-", "_")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    cfg = ScanConfig(experiment)
    if experiment == "ssh_scan":
        cfg.schedule = ScheduleConfig(n_steps=64, dt="auto", n_trotter=1)
    elif experiment == "finite_size":
        cfg.model.n_spins = [4, 6, 8]
        cfg.model.deltas = [-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3]
    elif experiment in ("energy_check", "parity_check"):
        cfg.model.deltas = [-0.5, 0.0, 0.5]
        cfg.r_iterations = 8
    return cfg


def _overlay(obj, values: dict, where: str):
    for key, val in values.items():
        if not hasattr(obj, key):
            raise ConfigError(f"unknown key {where}{key!r}")
        setattr(obj, key, copy.deepcopy(val))


def load_config(experiment: str, path: str | Path | None = None, overrides: dict | None = None) -> ScanConfig:
    """Defaults for ``experiment``, then the TOML file at ``path``, then ``overrides``.

    ``overrides`` keys are top-level names or ``"schedule.n_steps"``-style
    dotted names; ``None`` values are ignored.
    """
    cfg = default_config(experiment)
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        file_exp = data.pop("experiment", cfg.experiment).replace("-", "_")
        if file_exp != cfg.experiment:
            raise ConfigError(f"config is for {file_exp!r} but {cfg.experiment!r} was requested")
        _overlay(cfg.model, data.pop("model", {}), "model.")
        _overlay(cfg.schedule, data.pop("schedule", {}), "schedule.")
        _overlay(cfg, data, "")
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        target, name = cfg, key
        if "." in key:
            section, name = key.split(".", 1)
            target = getattr(cfg, section)
        _overlay(target, {name: val}, "")
    validate(cfg)
    return cfg


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def validate(cfg: ScanConfig) -> None:
    """Check every field against the preconditions of the code that will consume it.

    Normalizes ``readout`` aliases and list-valued fields in place.

    Raises:
        ConfigError: on the first invalid field.
    """
    m, s = cfg.model, cfg.schedule
    cfg.readout = _READOUT_ALIASES.get(cfg.readout, cfg.readout)
    if cfg.readout not in READOUTS:
        raise ConfigError(f"readout must be one of {READOUTS}, got {cfg.readout!r}")
    for name in ("shots", "r_iterations", "seed"):
        if not _is_int(getattr(cfg, name)):
            raise ConfigError(f"{name} must be an integer")
    if cfg.shots < 1:
        raise ConfigError("shots must be >= 1")
    if not 1 <= cfg.r_iterations <= MAX_R_ITERATIONS:
        raise ConfigError(f"r_iterations must lie in [1, {MAX_R_ITERATIONS}]")
    if cfg.seed < 0:
        raise ConfigError("seed must be nonnegative")

    if not _is_int(s.n_steps) or s.n_steps < 2:
        raise ConfigError("schedule.n_steps must be an integer >= 2")
    if s.split not in SPLITS:
        raise ConfigError(f"schedule.split must be one of {SPLITS}")
    if s.split == HALF and s.n_steps % 2:
        raise ConfigError("schedule.n_steps must be even for the half-forward/half-backward split")
    if s.dt != "auto" and not (_is_real(s.dt) and s.dt > 0):
        raise ConfigError("schedule.dt must be a positive number or 'auto'")
    if s.dt == "auto" and cfg.experiment != "ssh_scan":
        raise ConfigError("schedule.dt = 'auto' is only supported for ssh_scan")
    if not _is_int(s.n_trotter) or s.n_trotter < 1:
        raise ConfigError("schedule.n_trotter must be an integer >= 1")
    if not (_is_real(s.trotter_tolerance) and s.trotter_tolerance > 0):
        raise ConfigError("schedule.trotter_tolerance must be positive")
    if not (_is_real(s.min_fidelity) and 0 < s.min_fidelity <= 1):
        raise ConfigError("schedule.min_fidelity must lie in (0, 1]")

    if cfg.experiment == "ssh_scan":
        if not m.v_over_w or not all(_is_real(r) and r >= 0 for r in m.v_over_w):
            raise ConfigError("model.v_over_w must be a nonempty list of nonnegative numbers")
        if not (_is_real(m.w) and m.w > 0):
            raise ConfigError("model.w must be positive")
        m.v_over_w = [float(r) for r in m.v_over_w]
        return

    if isinstance(m.n_spins, int):
        m.n_spins = [m.n_spins]
    if not m.n_spins:
        raise ConfigError("model.n_spins must not be empty")
    for n in m.n_spins:
        if not _is_int(n) or n < 4 or n % 2:
            raise ConfigError(f"model.n_spins entries must be even integers >= 4, got {n!r}")
        limit = MAX_ED_QUBITS if cfg.experiment == "finite_size" else MAX_ED_QUBITS - 1
        if n > limit:
            raise ConfigError(f"n_spins={n} exceeds the size bound {limit}")
        if m.twisted_bond is not None and not 0 <= m.twisted_bond < (n if m.boundary == "PBC" else n - 1):
            raise ConfigError(f"model.twisted_bond {m.twisted_bond} invalid for n_spins={n}")
    if m.boundary not in ("PBC", "OBC"):
        raise ConfigError("model.boundary must be 'PBC' or 'OBC'")
    if not _is_real(m.J) or m.J == 0:
        raise ConfigError("model.J must be a nonzero number")
    if isinstance(m.deltas, (int, float)):
        m.deltas = [m.deltas]
    if not m.deltas or not all(_is_real(d) for d in m.deltas):
        raise ConfigError("model.deltas must be a nonempty list of numbers")
    m.deltas = [float(d) for d in m.deltas]
