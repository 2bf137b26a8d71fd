"""Run configuration: one JSON object, every field defaulted, unknown keys rejected."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

SCHEMES = ("first", "second", "explicit")
TAU_RULES = ("fixed", "h", "h2")


@dataclass
class RunConfig:
    """Fields left as None fall back to the chosen problem's defaults."""

    problem: str = "fokker_planck"
    params: dict = field(default_factory=dict)  # problem parameters, e.g. {"alpha": 5}
    inline: dict | None = None  # expression-based problem; overrides ``problem``
    N: int | None = None
    widths: list | None = None  # nonuniform 1D cell widths; overrides N
    Nx: int | None = None
    Ny: int | None = None
    tau: float | None = None  # shorthand for tau_rule="fixed", tau_coef=tau
    tau_rule: str | None = None
    tau_coef: float | None = None
    scheme: str | None = None
    limiter: bool = True
    limiter_cap: int | None = 64
    t_end: float | None = None
    snapshot_times: list | None = None
    output_dir: str = "out"
    seed: int = 0  # recorded only; the schemes are deterministic

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.scheme is not None and self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.tau_rule is not None and self.tau_rule not in TAU_RULES:
            raise ConfigError(f"tau_rule must be one of {TAU_RULES}, got {self.tau_rule!r}")
        for name in ("tau", "tau_coef", "t_end"):
            v = getattr(self, name)
            if v is not None and not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        for name in ("N", "Nx", "Ny", "limiter_cap"):
            v = getattr(self, name)
            if v is not None and not (isinstance(v, int) and v >= 1):
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.snapshot_times is not None:
            if any(not isinstance(t, (int, float)) or t < 0 for t in self.snapshot_times):
                raise ConfigError("snapshot times must be nonnegative numbers")
            if self.t_end is not None and any(t > self.t_end for t in self.snapshot_times):
                raise ConfigError("snapshot times must not exceed t_end")
        if not isinstance(self.params, dict):
            raise ConfigError("params must be an object")

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> RunConfig:
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)
