"""Adam optimizer over named tensors."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from t2net.engine.tensor import Tensor
from t2net.errors import ContractError, DimensionError

logger = logging.getLogger("t2net.engine.optim")


@dataclass
class AdamState:
    """First/second moment estimates for one parameter plus the step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def for_param(cls, param: Tensor) -> AdamState:
        return cls(m=np.zeros_like(param.data), v=np.zeros_like(param.data))


def adam_step(
    param: Tensor,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Bias-corrected Adam update applied to ``param.data`` in place."""
    if param.grad is None:
        raise ContractError(f"adam_step: parameter {param.name or param.shape} has no gradient")
    if state.m.shape != param.shape or state.v.shape != param.shape:
        raise DimensionError(
            f"adam_step: state {state.m.shape} does not match parameter {param.shape}"
        )
    g = param.grad
    state.step += 1
    state.m = beta1 * state.m + (1.0 - beta1) * g
    state.v = beta2 * state.v + (1.0 - beta2) * g * g
    m_hat = state.m / (1.0 - beta1**state.step)
    v_hat = state.v / (1.0 - beta2**state.step)
    update = lr * m_hat / (np.sqrt(v_hat) + eps)
    param.data -= update.astype(param.dtype, copy=False)


@dataclass
class Adam:
    """Adam over a name → Tensor mapping; parameters without a gradient are skipped."""

    params: Mapping[str, Tensor]
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    states: dict[str, AdamState] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, p in self.params.items():
            self.states[name] = AdamState.for_param(p)

    def step(self) -> None:
        skipped = 0
        for name, p in self.params.items():
            if p.grad is None:
                skipped += 1
                continue
            adam_step(p, self.states[name], self.lr, self.beta1, self.beta2, self.eps)
        if skipped:
            logger.debug("Adam step skipped %d parameters without gradients", skipped)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()
