"""Flat ``key = value`` experiment configuration.

Frequencies are rad/us.  A value may carry an ``MHz`` or ``GHz`` suffix,
meaning 2*pi times that cyclic frequency (``100MHz`` -> 628.318...).

Keys::

    seed, n_points, n_points_perturbative, dim, omega_mode, kerr,
    kerr_sweep (comma list), eta, steps, threshold, leakage_tol,
    ranges.omega_drive_max, ranges.omega_laser_max, ranges.time_max,
    output_dir, fig1_method (exact|perturbative), fig2_kerr, quad_points,
    fig4_steps (int or "converged"), target (sin2|zero),
    product_dim, product_n, product_kerr (comma list), product_trials
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data import DataRanges
from .dynamics import GHZ, MHZ, PhysicalParams
from .fock import FockSpace


def default_kerr_sweep() -> tuple:
    """Zero followed by 29 log-spaced values from 2pi*0.01 to 2pi*1000 MHz."""
    return (0.0, *(float(v) for v in np.logspace(-2, 3, 29) * MHZ))


class ConfigError(ValueError):
    pass


def parse_quantity(text: str) -> float:
    s = text.strip().replace(" ", "")
    for suffix, scale in (("GHz", GHZ), ("MHz", MHZ)):
        if s.endswith(suffix):
            return float(s[: -len(suffix)]) * scale
    return float(s)


def _parse_list(text: str) -> tuple:
    return tuple(parse_quantity(v) for v in text.split(",") if v.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    n_points: int = 10
    n_points_perturbative: int = 100
    dim: int = 100
    omega_mode: float = 10 * GHZ
    kerr: float = 0.0
    kerr_sweep: tuple = field(default_factory=default_kerr_sweep)
    eta: float = 1e-3
    steps: int = 500
    threshold: float = 1e-7
    leakage_tol: float = 1e-6
    ranges: DataRanges = field(default_factory=DataRanges)
    output_dir: str = "runs"
    fig1_method: str = "exact"
    fig2_kerr: float = 0.01 * MHZ
    quad_points: Optional[int] = None
    fig4_steps: Optional[int] = 500
    target: str = "sin2"
    product_dim: int = 16
    product_n: int = 4
    product_kerr: tuple = (0.0, 10 * MHZ)
    product_trials: int = 100

    def __post_init__(self):
        if self.n_points < 2:
            raise ConfigError("n_points must be >= 2")
        if any(k < 0 for k in self.kerr_sweep) or list(self.kerr_sweep) != sorted(self.kerr_sweep):
            raise ConfigError("kerr_sweep must be non-negative and ascending")
        if not self.kerr_sweep:
            raise ConfigError("kerr_sweep is empty")
        if self.fig1_method not in ("exact", "perturbative"):
            raise ConfigError(f"fig1_method must be exact or perturbative, not {self.fig1_method!r}")
        if self.target not in ("sin2", "zero"):
            raise ConfigError(f"target must be sin2 or zero, not {self.target!r}")
        if self.dim < 2 or self.eta < 0 or self.steps < 0 or self.threshold <= 0:
            raise ConfigError("need dim >= 2, eta >= 0, steps >= 0, threshold > 0")

    def params(self, kerr: Optional[float] = None) -> PhysicalParams:
        return PhysicalParams(omega_mode=self.omega_mode, kerr=self.kerr if kerr is None else kerr,
                              space=FockSpace(self.dim))

    def with_overrides(self, pairs: dict) -> "ExperimentConfig":
        values = self.to_dict()
        values.update(pairs)
        return ExperimentConfig.from_dict(values)

    def to_dict(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, DataRanges):
                for rf in dataclasses.fields(v):
                    d[f"ranges.{rf.name}"] = getattr(v, rf.name)
            else:
                d[f.name] = list(v) if isinstance(v, tuple) else v
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs, ranges = {}, {}
        for key, value in raw.items():
            if key.startswith("ranges."):
                name = key[len("ranges."):]
                if name not in {f.name for f in dataclasses.fields(DataRanges)}:
                    raise ConfigError(f"unknown key {key!r}")
                ranges[name] = parse_quantity(value) if isinstance(value, str) else float(value)
                continue
            if key not in known:
                raise ConfigError(f"unknown key {key!r}")
            kwargs[key] = _coerce(key, value)
        if ranges:
            kwargs["ranges"] = DataRanges(**{**dataclasses.asdict(DataRanges()), **ranges})
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(parse_pairs(text.splitlines()))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


_INT_KEYS = {"seed", "n_points", "n_points_perturbative", "dim", "steps", "product_dim", "product_n",
             "product_trials"}
_OPTIONAL_INT_KEYS = {"quad_points", "fig4_steps"}
_LIST_KEYS = {"kerr_sweep", "product_kerr"}
_STR_KEYS = {"output_dir", "fig1_method", "target"}


def _coerce(key, value):
    try:
        if key in _STR_KEYS:
            return str(value).strip()
        if key in _LIST_KEYS:
            return _parse_list(value) if isinstance(value, str) else tuple(float(v) for v in value)
        if key in _OPTIONAL_INT_KEYS:
            if value is None or str(value).strip().lower() in ("", "none", "converged"):
                return None
            return int(value)
        if key in _INT_KEYS:
            return int(value)
        return parse_quantity(value) if isinstance(value, str) else float(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def parse_pairs(lines) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        if isinstance(value, list):
            value = ", ".join(repr(v) for v in value)
        elif value is None:
            value = "none"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"

