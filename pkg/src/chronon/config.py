"""Run configuration models shared by the HTTP service and the CLI."""

from __future__ import annotations

import enum
import json
import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .clock_core import ClockParams
from .potentials import ConstantPotential, CosinePotential, PeriodicPotential

__all__ = [
    "Experiment",
    "ClockConfig",
    "PotentialConfig",
    "SystemConfig",
    "TimeGrid",
    "RunConfig",
    "ConfigError",
    "load_config",
]


class ConfigError(ValueError):
    """Raised for unreadable or invalid run configurations (CLI exit code 2)."""


class Experiment(str, enum.Enum):
    CONTINUITY = "continuity"
    CONTROL = "control"
    COMMUTATOR = "commutator"
    DISTURBANCE = "disturbance"
    CONJECTURE1 = "conjecture1"
    PERES_FIGURE = "peres_figure"
    EPSV_FIGURE = "epsv_figure"
    SWEEP = "sweep"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ClockConfig(_Strict):
    """Clock parameters; ``d`` is a list so that every experiment can sweep it.

    ``sigma_rule`` picks the width: ``sqrt_d`` (symmetric), or ``fixed`` with
    ``sigma`` given.  ``n0`` defaults to the centred value ``(d-1)/2``.
    """

    d: list[int] = Field(default_factory=lambda: [20], min_length=1)
    T0: float = Field(1.0, gt=0)
    sigma_rule: Literal["sqrt_d", "fixed"] = "sqrt_d"
    sigma: Optional[float] = Field(None, gt=0)
    n0: Optional[float] = None
    k0: float = 0.0

    @field_validator("d")
    @classmethod
    def _d_at_least_two(cls, v: list[int]) -> list[int]:
        if any(x < 2 for x in v):
            raise ValueError("every clock dimension must be >= 2")
        return v

    @model_validator(mode="after")
    def _sigma_given_when_fixed(self) -> "ClockConfig":
        if self.sigma_rule == "fixed" and self.sigma is None:
            raise ValueError("sigma_rule 'fixed' needs a sigma value")
        return self

    def params(self, d: int) -> ClockParams:
        sigma = math.sqrt(d) if self.sigma_rule == "sqrt_d" else self.sigma
        return ClockParams(d=d, T0=self.T0, sigma=sigma, n0=self.n0, k0=self.k0)


class PotentialConfig(_Strict):
    type: Literal["cosine", "constant", "zero"] = "cosine"
    n: int = Field(60, ge=1)
    omega: float = 1.0
    x0: float = math.pi

    def build(self, **overrides) -> PeriodicPotential | None:
        fields = {"n": self.n, "omega": self.omega, "x0": self.x0, **overrides}
        if self.type == "zero":
            return None
        if self.type == "constant":
            return ConstantPotential(omega=fields["omega"])
        return CosinePotential(n=fields["n"], omega=fields["omega"], x0=fields["x0"])


class SystemConfig(_Strict):
    """Controlled system in its joint eigenbasis.

    ``state`` is ``random_pure`` (seeded), ``maximally_mixed`` or ``explicit``
    (``amplitudes`` given as ``[re, im]`` pairs).
    """

    d_s: int = Field(2, ge=1)
    energies: Optional[list[float]] = None
    interaction_phases: list[float] = Field(default_factory=lambda: [0.0, math.pi / 2])
    state: Literal["random_pure", "maximally_mixed", "explicit"] = "random_pure"
    amplitudes: Optional[list[tuple[float, float]]] = None

    @model_validator(mode="after")
    def _shapes(self) -> "SystemConfig":
        if len(self.interaction_phases) != self.d_s:
            raise ValueError("interaction_phases must have d_s entries")
        if self.energies is not None and len(self.energies) != self.d_s:
            raise ValueError("energies must have d_s entries")
        if any(abs(w) > math.pi for w in self.interaction_phases):
            raise ValueError("interaction phases must lie in [-pi, pi]")
        if self.state == "explicit" and (self.amplitudes is None or len(self.amplitudes) != self.d_s):
            raise ValueError("explicit state needs d_s amplitude pairs")
        return self


class TimeGrid(_Strict):
    """Uniform grid of ``points`` times on ``[0, T0]`` unless ``times`` is given (units of T0)."""

    points: int = Field(201, ge=1)
    times: Optional[list[float]] = None


class RunConfig(_Strict):
    experiment: Experiment
    clock: ClockConfig = Field(default_factory=ClockConfig)
    potential: PotentialConfig = Field(default_factory=PotentialConfig)
    system: SystemConfig = Field(default_factory=SystemConfig)
    time_grid: TimeGrid = Field(default_factory=TimeGrid)
    output_dir: Optional[Path] = None
    seed: int = 0
    # experiment-specific knobs
    eval_time: Optional[float] = Field(None, description="evaluation time in units of T0 (continuity / conjecture1)")
    x0_list: list[float] = Field(default_factory=lambda: [math.pi, math.pi / 2, 3 * math.pi / 2])
    n_list: list[int] = Field(default_factory=lambda: [10, 60, 100])
    T0_list: list[float] = Field(default_factory=lambda: [1.0, 7.3])
    t1: Optional[float] = None
    t2: Optional[float] = None

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    def times(self, T0: float) -> list[float]:
        if self.time_grid.times is not None:
            return [float(t) * T0 for t in self.time_grid.times]
        m = self.time_grid.points
        if m == 1:
            return [0.0]
        return [T0 * i / (m - 1) for i in range(m)]


def load_config(path: str | Path, experiment: str | None = None) -> RunConfig:
    """Read a JSON config file; ``experiment`` (from the command line) fills or must match the file."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    if experiment is not None:
        if raw.setdefault("experiment", experiment) != experiment:
            raise ConfigError(f"config experiment {raw['experiment']!r} does not match {experiment!r}")
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
