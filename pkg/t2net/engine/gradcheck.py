"""
Central finite-difference gradient checks.

``check_gradients`` evaluates a scalar function of some tensors, backpropagates
on a tape and compares every (or a sampled subset of) analytic gradient entry
against (f(x+h) - f(x-h)) / 2h. Run it under ``precision("float64")``.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence

import numpy as np
from pydantic import BaseModel, Field

from t2net.engine.tensor import Tape, Tensor

logger = logging.getLogger("t2net.engine.gradcheck")


class TensorCheck(BaseModel):
    name: str
    checked: int = 0
    skipped: int = 0
    max_error: float = 0.0
    worst_index: int = -1


class GradcheckReport(BaseModel):
    """Per-tensor worst-case disagreement between analytic and numeric gradients."""

    rtol: float
    atol: float
    tensors: list[TensorCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(t.max_error < self.rtol for t in self.tensors)

    @property
    def max_error(self) -> float:
        return max((t.max_error for t in self.tensors), default=0.0)

    @property
    def skipped_fraction(self) -> float:
        total = sum(t.checked + t.skipped for t in self.tensors)
        return sum(t.skipped for t in self.tensors) / total if total else 0.0


def _entry_error(analytic: float, numeric: float, rtol: float, atol: float) -> float:
    """Relative error; near-zero analytic entries pass when the absolute error is below atol."""
    diff = abs(analytic - numeric)
    if abs(analytic) < atol:
        return 0.0 if diff < atol else diff / atol
    return diff / max(abs(analytic), abs(numeric))


def _crosses_kink(
    f_plus: float, f_zero: float, f_minus: float, h: float, rtol: float, atol: float
) -> bool:
    forward = (f_plus - f_zero) / h
    backward = (f_zero - f_minus) / h
    return abs(forward - backward) > rtol * max(abs(forward), abs(backward)) + atol


def check_gradients(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    h: float = 1e-4,
    rtol: float = 1e-4,
    atol: float = 1e-6,
    max_entries: int | None = None,
    seed: int = 0,
    skip_kinks: bool = False,
) -> GradcheckReport:
    """Compare tape gradients of ``fn()`` w.r.t. ``inputs`` with central differences.

    ``fn`` must rebuild its graph from the current ``inputs`` data on every call.
    ``max_entries`` limits the number of probed elements per tensor (random subset).
    With ``skip_kinks`` an entry whose forward and backward one-sided slopes
    disagree (the probe crossed a relu or |·| kink) is counted as skipped
    instead of compared.
    """
    for t in inputs:
        t.requires_grad = True
        t.zero_grad()
    with Tape() as tape:
        loss = fn()
    tape.backward(loss)
    f_zero = loss.item()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]

    rng = np.random.default_rng(seed)
    report = GradcheckReport(rtol=rtol, atol=atol)
    for i, (t, grad) in enumerate(zip(inputs, analytic)):
        flat = t.data.reshape(-1)
        entries = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            entries = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        check = TensorCheck(name=t.name or f"input{i}")
        for idx in entries:
            orig = flat[idx]
            flat[idx] = orig + h
            f_plus = fn().item()
            flat[idx] = orig - h
            f_minus = fn().item()
            flat[idx] = orig
            if skip_kinks and _crosses_kink(f_plus, f_zero, f_minus, h, rtol, atol):
                check.skipped += 1
                continue
            numeric = (f_plus - f_minus) / (2 * h)
            err = _entry_error(float(grad.reshape(-1)[idx]), numeric, rtol, atol)
            if err > check.max_error:
                check.max_error = err
                check.worst_index = int(idx)
            check.checked += 1
        report.tensors.append(check)
        logger.debug(
            "gradcheck %s: %d entries (%d skipped), max error %.3g",
            check.name, check.checked, check.skipped, check.max_error,
        )
    return report
