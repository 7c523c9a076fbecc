"""
Learnable weights of both branches and every task-transformer stage.

Parameters are stored by dotted name (``sr_blocks.1.conv2.weight``). Each
tensor draws from its own random stream keyed by (seed, name), so variants
built from the same seed share identical weights for the layers they have
in common.
"""

from __future__ import annotations

import logging
import zlib
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from t2net.engine.checkpoint import load_arrays, save_arrays
from t2net.engine.tensor import Tensor, default_dtype
from t2net.errors import ArtifactFormatError
from t2net.io.sidecar import read_sidecar, write_sidecar
from t2net.models.configs import ModelConfig, Variant

logger = logging.getLogger("t2net.network.params")

KERNEL = 3


@dataclass(frozen=True)
class ConvParams:
    weight: Tensor
    bias: Tensor


@dataclass(frozen=True)
class ConvSpec:
    name: str
    cin: int
    cout: int
    zero: bool = False


def conv_layout(cfg: ModelConfig) -> list[ConvSpec]:
    """Every convolution of the configured network, in a fixed order."""
    c, n, s = cfg.channels, cfg.n_stages, cfg.scale
    has_rec = cfg.variant != Variant.NO_REC
    has_tt = cfg.variant == Variant.FULL
    zero = cfg.zero_init_outputs

    specs = [ConvSpec("sr_shallow", 1, c)]
    if has_rec:
        specs.append(ConvSpec("rec_shallow", 1, c))
    for i in range(1, n + 1):
        specs += [ConvSpec(f"sr_blocks.{i}.conv1", c, c), ConvSpec(f"sr_blocks.{i}.conv2", c, c)]
        if has_rec:
            specs += [
                ConvSpec(f"rec_blocks.{i}.conv1", c, c),
                ConvSpec(f"rec_blocks.{i}.conv2", c, c),
            ]
        if has_tt:
            specs += [
                ConvSpec(f"tt.{i}.conv_z", 2 * c, c),
                ConvSpec(f"tt.{i}.conv_out", c, c, zero=zero),
            ]
    specs += [ConvSpec("upsampler", c, c * s * s), ConvSpec("final_conv", c, 1, zero=zero)]
    if has_rec:
        specs.append(ConvSpec("rec_out", c, 1, zero=zero))
    return specs


def _init_conv(spec: ConvSpec, seed: int) -> tuple[np.ndarray, np.ndarray]:
    shape = (spec.cout, spec.cin, KERNEL, KERNEL)
    if spec.zero:
        return np.zeros(shape), np.zeros(spec.cout)
    rng = np.random.default_rng([seed, zlib.crc32(spec.name.encode("utf-8"))])
    bound = 1.0 / np.sqrt(spec.cin * KERNEL * KERNEL)
    return rng.uniform(-bound, bound, size=shape), rng.uniform(-bound, bound, size=spec.cout)


@dataclass
class T2NetParams:
    """Named parameter tensors plus the config they were built for."""

    config: ModelConfig
    tensors: dict[str, Tensor] = field(default_factory=dict)

    @classmethod
    def init(cls, config: ModelConfig, seed: int = 0) -> T2NetParams:
        params = cls(config=config)
        for spec in conv_layout(config):
            w, b = _init_conv(spec, seed)
            for suffix, value in (("weight", w), ("bias", b)):
                key = f"{spec.name}.{suffix}"
                params.tensors[key] = Tensor(value, requires_grad=True, name=key)
        logger.debug("Initialized %d tensors (%d values)", len(params.tensors), params.num_values)
        return params

    def conv(self, name: str) -> ConvParams:
        try:
            return ConvParams(self.tensors[f"{name}.weight"], self.tensors[f"{name}.bias"])
        except KeyError as e:
            variant = self.config.variant.value
            raise KeyError(f"No convolution '{name}' in a {variant} network") from e

    def has(self, name: str) -> bool:
        return f"{name}.weight" in self.tensors

    @property
    def num_values(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def groups(self) -> dict[str, list[str]]:
        """Parameter groups: branch stems, per-branch Resblock stacks, each H^tt conv, heads."""
        out: dict[str, list[str]] = {}
        for name in self.tensors:
            parts = name.split(".")
            if parts[0] in ("sr_blocks", "rec_blocks"):
                key = parts[0]
            elif parts[0] == "tt":
                key = ".".join(parts[:3])
            else:
                key = parts[0]
            out.setdefault(key, []).append(name)
        return out

    def __iter__(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self.tensors.items())

    def copy(self) -> T2NetParams:
        return T2NetParams(
            config=self.config,
            tensors={
                k: Tensor(t.data, requires_grad=t.requires_grad, name=k, dtype=t.data.dtype.type)
                for k, t in self.tensors.items()
            },
        )

    def astype(self, dtype: type[np.floating]) -> T2NetParams:
        return T2NetParams(
            config=self.config,
            tensors={
                k: Tensor(t.data, requires_grad=True, name=k, dtype=dtype)
                for k, t in self.tensors.items()
            },
        )

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: t.data for k, t in self.tensors.items()}

    def zero_grad(self) -> None:
        for t in self.tensors.values():
            t.zero_grad()


# ── Checkpoint files ─────────────────────────────────────────────────────


def config_path(checkpoint: Path | str) -> Path:
    return Path(f"{checkpoint}.config.txt")


def save_params(path: Path | str, params: T2NetParams) -> Path:
    """Write parameters (container) and the model config (sidecar)."""
    path = save_arrays(path, params.arrays())
    write_sidecar(config_path(path), params.config.model_dump(mode="json"), header="t2net model")
    logger.info("Saved checkpoint %s (%d values)", path, params.num_values)
    return path


def load_params(path: Path | str, config: ModelConfig | None = None) -> T2NetParams:
    """Load a checkpoint; the architecture comes from its sidecar unless given."""
    path = Path(path)
    arrays = load_arrays(path)
    if config is None:
        sidecar = config_path(path)
        try:
            config = ModelConfig(**read_sidecar(sidecar))
        except ValidationError as e:
            raise ArtifactFormatError(f"{sidecar}: invalid model config: {e}") from e
    expected = T2NetParams.init(config)
    if set(arrays) != set(expected.tensors):
        missing = sorted(set(expected.tensors) - set(arrays))
        extra = sorted(set(arrays) - set(expected.tensors))
        raise ArtifactFormatError(
            f"{path}: parameter names differ (missing={missing}, extra={extra})"
        )
    params = T2NetParams(config=config)
    for name, ref in expected.tensors.items():
        if arrays[name].shape != ref.shape:
            raise ArtifactFormatError(
                f"{path}: '{name}' has shape {arrays[name].shape}, expected {ref.shape}"
            )
        params.tensors[name] = Tensor(
            arrays[name], requires_grad=True, name=name, dtype=default_dtype()
        )
    return params
