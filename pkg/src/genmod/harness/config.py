"""Experiment configuration: a JSON document with a fixed set of keys."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..errors import ConfigurationError

METHODS = ("genmod", "genmod-nosparse", "omp", "irw-lasso")


@dataclass(frozen=True)
class EllipticGenerator:
    kind: str = "elliptic1d"
    L: float = 0.2
    a_bar: float = 0.1
    sigma: float = 0.03
    element_count: int = 64
    n_quad: int = 200


@dataclass(frozen=True)
class SyntheticGenerator:
    """Planted decay-model coefficients with sparse spikes.

    ``z_star`` defaults to ``(0, decay..., algebraic...)`` drawn uniformly from
    ``decay_range`` and ``algebraic_range`` using ``coefficient_seed``.
    """

    kind: str = "synthetic"
    z_star: tuple | None = None
    decay_range: tuple = (2.0, 4.0)
    algebraic_range: tuple = (0.0, 1.0)
    signs: str = "random"
    spike_count: int = 5
    spike_low: float = 1.0
    spike_high: float = 3.0
    spike_relative: bool = True
    noise_level: float = 0.0
    coefficient_seed: int = 0


@dataclass(frozen=True)
class SolverSettings:
    learning_rate: float = 1e-2
    max_outer: int = 20
    max_adam_iter: int = 50000
    delta_tol: float = 1e-6
    weight_eps: float = 1e-4
    folds: int = 5
    lasso_grid_size: int = 100
    lasso_grid_ratio: float = 1e-3
    irw_tau0: float = 1e-4
    irw_tau_max: float = 1e-1
    irw_max_iter: int = 20
    omp_max_atoms: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    p: int
    N: tuple
    generator: EllipticGenerator | SyntheticGenerator = field(default_factory=EllipticGenerator)
    va_fraction: float = 0.2
    N_te: int = 1000
    N_ls: int = 5000
    methods: tuple = METHODS
    replication_count: int = 10
    master_seed: int = 0
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if self.d < 1 or self.p < 0:
            raise ConfigurationError(f"invalid basis size d={self.d}, p={self.p}")
        if not self.N or any(int(n) < 5 for n in self.N):
            raise ConfigurationError(f"every sample count must be at least 5, got {self.N}")
        if not 0 < self.va_fraction < 1:
            raise ConfigurationError(f"va_fraction must lie in (0, 1), got {self.va_fraction}")
        if self.replication_count < 1:
            raise ConfigurationError("replication_count must be at least 1")
        if self.N_te < 1:
            raise ConfigurationError("N_te must be at least 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ConfigurationError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if isinstance(self.generator, SyntheticGenerator):
            if self.generator.signs not in ("random", "positive"):
                raise ConfigurationError("synthetic signs must be 'random' or 'positive'")
            if self.generator.z_star is not None and len(self.generator.z_star) != 2 * self.d + 1:
                raise ConfigurationError(f"z_star must have length {2 * self.d + 1}")

    @property
    def uses_reference(self) -> bool:
        return isinstance(self.generator, SyntheticGenerator) or self.N_ls > 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["N"] = list(self.N)
        out["methods"] = list(self.methods)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigurationError("configuration must be a JSON object")
        data = _take(raw, cls, "config")
        gen_raw = data.pop("generator", None)
        if gen_raw is not None:
            kind = gen_raw.get("kind", "elliptic1d") if isinstance(gen_raw, dict) else None
            gen_cls = {"elliptic1d": EllipticGenerator, "synthetic": SyntheticGenerator}.get(kind)
            if gen_cls is None:
                raise ConfigurationError(f"unknown generator kind {kind!r}")
            gen = _take(gen_raw, gen_cls, "generator")
            for key in ("z_star", "decay_range", "algebraic_range"):
                if gen.get(key) is not None:
                    gen[key] = tuple(float(v) for v in gen[key])
            data["generator"] = gen_cls(**gen)
        if "solver" in data:
            data["solver"] = SolverSettings(**_take(data["solver"], SolverSettings, "solver"))
        if "N" in data:
            n = data["N"]
            data["N"] = tuple(int(v) for v in (n if isinstance(n, (list, tuple)) else [n]))
        if "methods" in data:
            data["methods"] = tuple(data["methods"])
        missing = {"d", "p", "N"} - set(data)
        if missing:
            raise ConfigurationError(f"missing required keys {sorted(missing)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read configuration {path}: {exc}") from None
        return cls.from_dict(raw)


def _take(raw, cls, where: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{where} must be a JSON object")
    allowed = {f.name for f in fields(cls)}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigurationError(f"unknown keys in {where}: {sorted(unknown)}")
    return dict(raw)
