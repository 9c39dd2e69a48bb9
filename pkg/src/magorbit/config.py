"""Experiment configuration: one JSON document per run."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigurationError
from .liealg import LieAlgebraSpec, algebra_from_dict

KINDS = ("geodesic", "pendulum", "semidirect", "radius_scan", "certify", "lax")


class AlgebraConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Literal["so", "su"] | None = None
    n: int | None = Field(default=None, ge=2)
    basis: list | None = None
    name: str | None = None

    @model_validator(mode="after")
    def _one_form(self):
        if self.basis is None and (self.family is None or self.n is None):
            raise ValueError("give either family and n, or an explicit basis")
        if self.basis is not None and self.family is not None:
            raise ValueError("family and basis are mutually exclusive")
        return self

    def build(self) -> LieAlgebraSpec:
        return algebra_from_dict(self.model_dump(exclude_none=True))


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["geodesic", "pendulum", "semidirect", "radius_scan", "certify", "lax"]
    algebra: AlgebraConfig
    a: list[float]
    epsilon: float = 0.0
    b: list[float] | None = None
    kappa: float = 1.0
    h: float = Field(default=1e-3, gt=0)
    t_end: float = Field(default=10.0, gt=0)
    project_every: int = Field(default=10, ge=0)
    record_every: int = Field(default=1, ge=1)
    lambda_grid: list[float] | None = None
    lax_lambdas: list[float] = [0.3, 1.0, 2.5]
    seeds: list[int] = Field(default=[0], min_length=1)
    epsilons: list[float] | None = None
    samples: int = Field(default=20, ge=1)
    speed: float = Field(default=1.0, gt=0)
    out: str | None = None

    @field_validator("a")
    @classmethod
    def _nonzero(cls, v):
        if not v or not any(v):
            raise ValueError("a must be a nonzero coordinate vector")
        return v

    @model_validator(mode="after")
    def _kind_requirements(self):
        problems = []
        if self.kind == "radius_scan":
            if self.epsilons is None:
                problems.append("epsilons: required for radius_scan")
            if self.algebra.family != "so" or self.algebra.n != 3:
                problems.append("algebra: radius_scan is defined on so(3) only")
            if abs(float(np.linalg.norm(self.a)) - 1.0) > 1e-12:
                problems.append("a: radius_scan requires a unit seed vector")
        if self.kind in ("certify", "lax") and self.b is None:
            problems.append(f"b: required for {self.kind}")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def canonical(self) -> dict:
        """Everything that determines the results (the output directory does not)."""
        return self.model_dump(exclude={"out"}, mode="json")

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "invalid config:\n  " + "\n  ".join(lines)


def parse_config(doc: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigurationError(format_validation_error(exc)) from exc


def load_config(path) -> ExperimentConfig:
    """Read and validate a config file; I/O failures propagate as OSError."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a JSON object")
    return parse_config(doc)
