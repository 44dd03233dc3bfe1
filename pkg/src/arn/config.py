"""Run configuration shared by training, decoding and the command line."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Optional

LOSS_MODES = ("bag", "marginal", "naive")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int = 13
    # model dimensions
    word_dim: int = 32
    pos_dim: int = 8
    char_dim: int = 8
    char_hidden: int = 8
    hidden: int = 32
    mlp_hidden: list[int] = field(default_factory=lambda: [32])
    conv_k: int = 1
    conv_dim: int = 32
    init_scale: Optional[float] = None  # None: Glorot-uniform matrices
    train_pos: bool = True
    # objective
    loss_mode: str = "bag"
    alpha: float = 1.0
    gamma: float = 0.5
    restrict_competitors: bool = True
    # optimiser
    rho: float = 0.95
    eps: float = 1e-6
    clip: Optional[float] = None
    epochs: int = 10
    patience: Optional[int] = None
    target_f1: Optional[float] = None
    # decoding
    max_len: Optional[int] = None
    anchor_min_prob: Optional[float] = None
    # synthetic data
    gen_sentences: int = 1000
    gen_nesting: float = 0.2
    # paths
    train: Optional[str] = None
    dev: Optional[str] = None
    test: Optional[str] = None
    embeddings: Optional[str] = None
    checkpoint: Optional[str] = None
    log: Optional[str] = None

    def validate(self) -> "RunConfig":
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.loss_mode not in LOSS_MODES:
            raise ConfigError(f"loss_mode must be one of {LOSS_MODES}, got {self.loss_mode!r}")
        if self.max_len is not None and self.max_len < 1:
            raise ConfigError(f"max_len must be >= 1, got {self.max_len}")
        if self.conv_k < 0:
            raise ConfigError("conv_k must be >= 0")
        for name in ("word_dim", "pos_dim", "char_dim", "char_hidden", "hidden", "conv_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0.0 < self.rho < 1.0 or self.eps <= 0:
            raise ConfigError("Adadelta needs 0 < rho < 1 and eps > 0")
        return self

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as f:
            try:
                obj = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: invalid JSON ({e.msg})") from None
        return cls.from_json(obj)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)
