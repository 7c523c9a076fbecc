"""
Two-branch forward pass.

    F0_SR = Conv(x̂_LR),  F0_Rec = Conv(x̂_LR)
    for i in 1..N:
        F_Rec ← Resblock_Rec_i(F_Rec)
        F_SR  ← Resblock_SR_i(F_prev)
        F_prev ← H^tt_i(F_SR, F_Rec)
    x'    = Conv(PixelShuffle(Conv(F_prev + F0_SR)))
    x'_LR = Conv(F_Rec)

The ``no_tt`` variant fuses by plain addition; ``no_rec`` drops the Rec branch
and every task transformer.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

from t2net.engine import ops
from t2net.engine.tensor import Tensor
from t2net.errors import DimensionError, ParameterError
from t2net.models.configs import ModelConfig, Variant
from t2net.network.layers import conv3x3, resblock_forward
from t2net.network.params import T2NetParams, conv_layout
from t2net.network.task_transformer import AttentionOutputs, task_transformer_forward

logger = logging.getLogger("t2net.network.t2net")


@dataclass
class ForwardResult:
    x_sr: Tensor
    x_rec: Tensor | None
    attention: list[AttentionOutputs] = field(default_factory=list)


def _check_layers(params: T2NetParams, cfg: ModelConfig) -> None:
    missing = [spec.name for spec in conv_layout(cfg) if not params.has(spec.name)]
    if missing:
        raise ParameterError(
            f"parameters built for '{params.config.variant.value}' lack layers needed by "
            f"'{cfg.variant.value}': {missing[:4]}{' …' if len(missing) > 4 else ''}"
        )


def run_network(
    input_lr: Tensor,
    params: T2NetParams,
    cfg: ModelConfig | None = None,
    frozen_attention: Sequence[AttentionOutputs] | None = None,
) -> ForwardResult:
    """Full forward pass, also returning each stage's attention maps.

    ``frozen_attention`` (one entry per stage) replays fixed T and S, which
    makes the network a smooth function of its parameters for gradient checks.
    """
    cfg = cfg or params.config
    if input_lr.ndim != 4 or input_lr.shape[1] != 1:
        raise DimensionError(f"input_lr must be B×1×h×w, got {input_lr.shape}")
    if frozen_attention is not None and len(frozen_attention) != cfg.n_stages:
        raise ParameterError(
            f"{len(frozen_attention)} frozen attention maps for {cfg.n_stages} stages"
        )
    _check_layers(params, cfg)
    has_rec = cfg.variant != Variant.NO_REC

    f0_sr = conv3x3(input_lr, params.conv("sr_shallow"))
    f_rec = conv3x3(input_lr, params.conv("rec_shallow")) if has_rec else None
    prev = f0_sr
    attention: list[AttentionOutputs] = []

    for i in range(1, cfg.n_stages + 1):
        if f_rec is not None:
            f_rec = resblock_forward(
                f_rec, params.conv(f"rec_blocks.{i}.conv1"), params.conv(f"rec_blocks.{i}.conv2")
            )
        f_sr = resblock_forward(
            prev, params.conv(f"sr_blocks.{i}.conv1"), params.conv(f"sr_blocks.{i}.conv2")
        )
        if cfg.variant == Variant.FULL:
            frozen = frozen_attention[i - 1] if frozen_attention is not None else None
            prev, att = task_transformer_forward(f_sr, f_rec, params, i, cfg, frozen=frozen)
            attention.append(att)
        elif cfg.variant == Variant.NO_TT:
            prev = ops.add(f_sr, f_rec)
        else:
            prev = f_sr

    up = conv3x3(ops.add(prev, f0_sr), params.conv("upsampler"))
    x_sr = conv3x3(ops.pixel_shuffle(up, cfg.scale), params.conv("final_conv"))
    x_rec = conv3x3(f_rec, params.conv("rec_out")) if f_rec is not None else None
    return ForwardResult(x_sr=x_sr, x_rec=x_rec, attention=attention)


def t2net_forward(
    input_lr: Tensor,
    params: T2NetParams,
    cfg: ModelConfig | None = None,
) -> tuple[Tensor, Tensor | None]:
    """(x', x'_LR) for a B×1×h×w input; x'_LR is None for the ``no_rec`` variant."""
    result = run_network(input_lr, params, cfg)
    return result.x_sr, result.x_rec


def ablation_forward(
    variant: Variant | str,
    input_lr: Tensor,
    params: T2NetParams,
    cfg: ModelConfig | None = None,
) -> tuple[Tensor, Tensor | None]:
    """Forward pass of one ablation variant over (a superset of) its parameters."""
    cfg = (cfg or params.config).model_copy(update={"variant": Variant(variant)})
    return t2net_forward(input_lr, params, cfg)
