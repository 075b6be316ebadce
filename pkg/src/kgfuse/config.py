"""Model configuration.

Defaults are the published full-scale settings (hidden size 768, KG
embedding size 200, top-10 neighbor recall, scale factor 10, loss weights
2 and 4, infusion after encoder layer 10). Tests and the CLI override them
for desk-scale runs; the defaults themselves are part of the contract and
audited by the acceptance suite.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

DTYPES = ("float32", "float64")


@dataclass
class ModelConfig:
    d1: int = 768               # encoder hidden size
    d2: int = 200               # KG embedding size
    layers: int = 12
    heads: int = 12
    vocab_size: int = 21128
    max_len: int = 512
    k: int = 10                 # neighbors recalled per mention
    mu: float = 10.0            # compatibility scale factor
    lambda1: float = 2.0        # neighbor-modeling loss weight
    lambda2: float = 4.0        # mention-modeling loss weight
    k_neg: int = 10             # negatives per neighbor triple
    injection_layer: int = 10   # infusion applies after this layer
    alpha: float = 0.85         # PageRank damping
    seed: int = 42
    dtype: str = "float64"

    def validate(self) -> "ModelConfig":
        if self.d1 <= 0 or self.d2 <= 0:
            raise ConfigError(f"dimensions must be positive, got d1={self.d1} d2={self.d2}")
        if self.d1 % self.heads != 0:
            raise ConfigError(f"d1={self.d1} not divisible by heads={self.heads}")
        if not 1 <= self.injection_layer <= self.layers:
            raise ConfigError(
                f"injection_layer={self.injection_layer} outside [1, {self.layers}]"
            )
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha={self.alpha} outside (0, 1)")
        if self.k < 1:
            raise ConfigError(f"k={self.k} must be >= 1")
        if self.k_neg < 0:
            raise ConfigError(f"k_neg={self.k_neg} must be >= 0")
        if self.max_len < 4:
            raise ConfigError(f"max_len={self.max_len} must be >= 4")
        if self.mu <= 0:
            raise ConfigError(f"mu={self.mu} must be positive")
        if self.dtype not in DTYPES:
            raise ConfigError(f"dtype={self.dtype!r} not one of {DTYPES}")
        return self

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes).validate()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - fields
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data).validate()

    @classmethod
    def from_json(cls, path: str | Path) -> "ModelConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)
