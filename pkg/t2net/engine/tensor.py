"""
Dense tensors with tape-based reverse-mode differentiation.

A ``Tensor`` wraps one ``numpy.ndarray``. Operations in ``t2net.engine.ops``
append a ``TapeRecord`` to the innermost active ``Tape``; outside of a tape
nothing is recorded and results never require gradients (inference mode).

Usage:
    with Tape() as tape:
        loss = ops.l1_loss(model(x), target)
    tape.backward(loss)
"""

from __future__ import annotations

import logging
import threading
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from t2net.errors import ContractError

logger = logging.getLogger("t2net.engine.tensor")

# ── Precision ────────────────────────────────────────────────────────────

_DTYPES = {"float32": np.float32, "float64": np.float64}

# Precision and tape stacks are per thread; worker threads start in float32 with no tape.
_local = threading.local()


def _dtype_stack() -> list[type[np.floating]]:
    stack = getattr(_local, "dtypes", None)
    if stack is None:
        stack = _local.dtypes = [np.float32]
    return stack


def _tape_stack() -> list[Tape]:
    stack = getattr(_local, "tapes", None)
    if stack is None:
        stack = _local.tapes = []
    return stack


def default_dtype() -> type[np.floating]:
    """Floating dtype used for newly created tensors."""
    return _dtype_stack()[-1]


@contextmanager
def precision(name: str) -> Iterator[None]:
    """Temporarily switch the default dtype (``float32`` or ``float64``).

    float64 exists for finite-difference gradient checks; training runs in float32.
    """
    if name not in _DTYPES:
        raise ValueError(f"Unknown precision '{name}'. Use one of {sorted(_DTYPES)}")
    _dtype_stack().append(_DTYPES[name])
    try:
        yield
    finally:
        _dtype_stack().pop()


# ── Tensor ───────────────────────────────────────────────────────────────


class Tensor:
    """N-dimensional real array with optional gradient (layout B×C×H×W for 4-D)."""

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(
        self,
        data: np.ndarray | Sequence | float,
        requires_grad: bool = False,
        name: str = "",
        dtype: type[np.floating] | None = None,
    ) -> None:
        self.data = np.array(data, dtype=dtype or default_dtype(), copy=True)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @classmethod
    def wrap(cls, data: np.ndarray, requires_grad: bool = False) -> Tensor:
        """Wrap an array the caller hands over (no copy, dtype kept)."""
        t = cls.__new__(cls)
        t.data = data
        t.requires_grad = requires_grad
        t.grad = None
        t.name = ""
        return t

    @classmethod
    def zeros(cls, shape: Sequence[int], requires_grad: bool = False) -> Tensor:
        return cls(np.zeros(tuple(shape)), requires_grad=requires_grad)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def values(self) -> np.ndarray:
        """Flat row-major view of the data."""
        return self.data.reshape(-1)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        return Tensor.wrap(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return (
            f"Tensor(shape={self.shape}, dtype={self.dtype}, "
            f"requires_grad={self.requires_grad}{label})"
        )

    # Arithmetic sugar; the real work lives in ops.
    def __add__(self, other: Tensor | float) -> Tensor:
        from t2net.engine import ops
        return ops.add(self, other)

    def __radd__(self, other: float) -> Tensor:
        return self.__add__(other)

    def __sub__(self, other: Tensor | float) -> Tensor:
        from t2net.engine import ops
        return ops.sub(self, other)

    def __mul__(self, other: Tensor | float) -> Tensor:
        from t2net.engine import ops
        return ops.mul(self, other)

    def __rmul__(self, other: float) -> Tensor:
        return self.__mul__(other)


# ── Tape ─────────────────────────────────────────────────────────────────

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


@dataclass
class TapeRecord:
    """One recorded operation: its inputs, output and backward rule."""

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


@dataclass
class Tape:
    """Ordered list of recorded operations for one forward pass."""

    records: list[TapeRecord] = field(default_factory=list)

    def __enter__(self) -> Tape:
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc_info) -> None:
        _tape_stack().remove(self)

    def __len__(self) -> int:
        return len(self.records)

    def backward(self, loss: Tensor) -> None:
        backward(loss, self)


def active_tape() -> Tape | None:
    stack = _tape_stack()
    return stack[-1] if stack else None


def record(
    op: str,
    inputs: Sequence[Tensor],
    output: Tensor,
    backward_fn: BackwardFn,
) -> Tensor:
    """Attach ``output`` to the active tape when any input needs gradients."""
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        output.requires_grad = True
        tape.records.append(TapeRecord(op, tuple(inputs), output, backward_fn))
    return output


def backward(loss: Tensor, tape: Tape) -> None:
    """Replay backward rules in reverse order, accumulating into ``.grad``.

    Gradients add up across multiple uses of the same tensor.
    """
    if loss.size != 1:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("backward() called on a loss that was not recorded on this tape")
    produced = {id(r.output) for r in tape.records}
    if id(loss) not in produced:
        raise ContractError("loss was not produced under this tape")

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    tensors: dict[int, Tensor] = {id(loss): loss}

    for rec in reversed(tape.records):
        g_out = grads.get(id(rec.output))
        if g_out is None:
            continue
        in_grads = rec.backward(g_out)
        for inp, g in zip(rec.inputs, in_grads):
            if g is None or not inp.requires_grad:
                continue
            key = id(inp)
            if key in grads:
                grads[key] = grads[key] + g
            else:
                grads[key] = g
                tensors[key] = inp

    for key, g in grads.items():
        t = tensors[key]
        g = g.astype(t.dtype, copy=False).reshape(t.shape)
        t.grad = g.copy() if t.grad is None else t.grad + g
    logger.debug("backward: %d records, %d gradients", len(tape.records), len(grads))
