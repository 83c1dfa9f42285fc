"""Sample sets of (input point, observed quantity) and their on-disk format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GENERATOR_VERSION = "1"


@dataclass
class Dataset:
    """Inputs ``y`` of shape (N, d) in [-1, 1]^d and observations ``u`` of length N."""

    y: np.ndarray
    u: np.ndarray
    seed: int | None = None
    noise_level: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.y = np.atleast_2d(np.asarray(self.y, dtype=float))
        self.u = np.asarray(self.u, dtype=float).reshape(-1)
        if self.y.shape[0] != self.u.size:
            raise ValueError(f"{self.y.shape[0]} input rows but {self.u.size} observations")

    @property
    def n(self) -> int:
        return self.u.size

    @property
    def d(self) -> int:
        return self.y.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.y[rows], self.u[rows], self.seed, self.noise_level, dict(self.metadata))

    def to_csv(self, path, metadata_path=None) -> Path:
        """Write ``y_1..y_d,u`` rows at full precision plus a JSON sidecar.

        Returns the sidecar path (``<path>.json`` unless given).
        """
        path = Path(path)
        header = ",".join([f"y_{i + 1}" for i in range(self.d)] + ["u"])
        np.savetxt(path, np.column_stack([self.y, self.u]), fmt="%.17g", delimiter=",",
                   header=header, comments="")
        meta_path = Path(metadata_path) if metadata_path else path.with_name(path.name + ".json")
        meta = {"d": self.d, "seed": self.seed, "noise_level": self.noise_level,
                "generator_version": GENERATOR_VERSION, **self.metadata}
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
        return meta_path

    @classmethod
    def from_csv(cls, path, metadata_path=None) -> "Dataset":
        path = Path(path)
        with path.open() as fh:
            header = fh.readline().strip().split(",")
        if not header or header[-1] != "u" or any(
            h != f"y_{i + 1}" for i, h in enumerate(header[:-1])
        ):
            raise ValueError(f"{path}: expected header y_1,...,y_d,u, got {','.join(header)}")
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        meta_path = Path(metadata_path) if metadata_path else path.with_name(path.name + ".json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        seed = meta.pop("seed", None)
        noise = meta.pop("noise_level", 0.0)
        for key in ("d", "generator_version"):
            meta.pop(key, None)
        return cls(table[:, :-1], table[:, -1], seed, noise, meta)
