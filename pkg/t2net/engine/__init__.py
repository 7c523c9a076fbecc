"""Minimal dense-tensor engine with reverse-mode automatic differentiation."""

from t2net.engine.optim import Adam, AdamState, adam_step
from t2net.engine.tensor import Tape, Tensor, backward, default_dtype, precision

__all__ = [
    "Adam",
    "AdamState",
    "Tape",
    "Tensor",
    "adam_step",
    "backward",
    "default_dtype",
    "precision",
]
