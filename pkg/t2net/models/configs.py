"""Run configuration models: network architecture and training loop."""

from __future__ import annotations

import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Variant(str, Enum):
    """Ablation selector: the full network, no task transformer, or no Rec branch."""

    FULL = "full"
    NO_TT = "no_tt"
    NO_REC = "no_rec"


class QueryMode(str, Enum):
    """How the task transformer forms its query.

    SUM:  Q = F_SR + F_Rec (argument of H^tt in the SR branch update)
    SR:   Q = F_SR         (query/key labelling of the module diagram)
    """

    SUM = "sum"
    SR = "sr"


class ModelConfig(BaseModel):
    """Architecture hyper-parameters of the two-branch network."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_stages: int = Field(default=4, ge=1)
    channels: int = Field(default=32, ge=1)
    scale: int = 2
    patch_k: int = 3
    resblock_convs: int = 2
    zero_init_outputs: bool = True
    query_mode: QueryMode = QueryMode.SUM
    variant: Variant = Variant.FULL

    @field_validator("scale")
    @classmethod
    def _scale_supported(cls, v: int) -> int:
        if v not in (1, 2, 4):
            raise ValueError(f"scale must be 1, 2 or 4, got {v}")
        return v

    @field_validator("patch_k")
    @classmethod
    def _patch_odd(cls, v: int) -> int:
        if v < 1 or v % 2 == 0:
            raise ValueError(f"patch_k must be a positive odd integer, got {v}")
        return v

    @field_validator("resblock_convs")
    @classmethod
    def _two_convs(cls, v: int) -> int:
        if v != 2:
            raise ValueError("Resblocks use exactly 2 convolutions")
        return v


class TrainConfig(BaseModel):
    """Joint-loss training run: loss weights, optimizer and budget."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: float = Field(default=0.2, ge=0.0)
    beta: float = Field(default=0.8, ge=0.0)
    lr: float = Field(default=5e-4, ge=0.0)
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    steps: int = Field(default=500, ge=0)
    epochs: int | None = Field(default=None, ge=0)
    batch: int = Field(default=2, ge=1)
    seed: int = Field(default=0, ge=0)
    log_every: int = Field(default=50, ge=1)
    # 0 disables periodic evaluation on the training set
    eval_every: int = Field(default=0, ge=0)
    model: ModelConfig = Field(default_factory=ModelConfig)

    @model_validator(mode="after")
    def _weights_not_both_zero(self) -> TrainConfig:
        if self.alpha + self.beta <= 0:
            raise ValueError("alpha + beta must be positive")
        return self

    @property
    def variant(self) -> Variant:
        return self.model.variant

    def total_steps(self, dataset_size: int) -> int:
        """Step budget; epoch mode visits every slice once per epoch."""
        if self.epochs is None:
            return self.steps
        return self.epochs * math.ceil(dataset_size / self.batch)

    def with_variant(self, variant: Variant) -> TrainConfig:
        return self.model_copy(update={"model": self.model.model_copy(update={"variant": variant})})

    @classmethod
    def from_flat(cls, values: dict) -> TrainConfig:
        """Build from a flat key/value mapping (config file layout)."""
        model_keys = set(ModelConfig.model_fields)
        model_part = {k: v for k, v in values.items() if k in model_keys}
        train_part = {k: v for k, v in values.items() if k not in model_keys}
        return cls(**train_part, model=ModelConfig(**model_part))

    def to_flat(self) -> dict:
        flat = self.model_dump(mode="json", exclude={"model"})
        flat.update(self.model.model_dump(mode="json"))
        return flat
