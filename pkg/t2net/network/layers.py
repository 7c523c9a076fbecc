"""Convolution and EDSR-style Resblock building blocks."""

from __future__ import annotations

from t2net.engine import ops
from t2net.engine.tensor import Tensor
from t2net.network.params import ConvParams


def conv3x3(x: Tensor, conv: ConvParams) -> Tensor:
    """3×3 convolution, stride 1, padding 1 (shape-preserving)."""
    return ops.conv2d(x, conv.weight, conv.bias, stride=1, padding=1)


def resblock_forward(x: Tensor, conv1: ConvParams, conv2: ConvParams) -> Tensor:
    """x + conv(relu(conv(x))); no normalization layers."""
    return ops.add(x, conv3x3(ops.relu(conv3x3(x, conv1)), conv2))
