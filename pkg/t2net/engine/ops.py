"""
Differentiable operators used by the network.

Every op takes and returns ``Tensor`` objects, computes its forward value with
numpy and records a backward rule on the active tape. Shape problems raise
``DimensionError`` naming the offending shapes.

Conventions:
- conv2d is cross-correlation (no kernel flip) with zero padding.
- unfold columns are patches flattened in (channel, row, col) order.
- resample bilinear uses the align-corners-false source mapping.
- relu has subgradient 0 at exactly 0.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from t2net.engine.tensor import Tensor, record
from t2net.errors import DimensionError, IndexBoundsError, ParameterError

logger = logging.getLogger("t2net.engine.ops")

ResampleMode = Literal["nearest", "bilinear"]


def _require_4d(x: Tensor, op: str) -> None:
    if x.ndim != 4:
        raise DimensionError(f"{op} expects a 4-D B×C×H×W tensor, got shape {x.shape}")


def _as_tensor(value: Tensor | float, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor.wrap(np.full((), value, dtype=like.dtype))


# ── Patch extraction helpers ─────────────────────────────────────────────


def _pad(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _output_hw(h: int, w: int, k: int, stride: int, padding: int) -> tuple[int, int]:
    return (h + 2 * padding - k) // stride + 1, (w + 2 * padding - k) // stride + 1


def _im2col(x: np.ndarray, k: int, stride: int, padding: int) -> np.ndarray:
    """B×C×H×W → B×(C·k·k)×(Ho·Wo)."""
    b, c = x.shape[:2]
    win = sliding_window_view(_pad(x, padding), (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    ho, wo = win.shape[2], win.shape[3]
    return win.transpose(0, 1, 4, 5, 2, 3).reshape(b, c * k * k, ho * wo)


def _col2im(
    cols: np.ndarray,
    shape: tuple[int, int, int, int],
    k: int,
    stride: int,
    padding: int,
) -> np.ndarray:
    """Scatter-add B×(C·k·k)×L patch columns back onto a B×C×H×W grid."""
    b, c, h, w = shape
    ho, wo = _output_hw(h, w, k, stride, padding)
    cols = cols.reshape(b, c, k, k, ho, wo)
    out = np.zeros((b, c, h + 2 * padding, w + 2 * padding), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            out[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += cols[:, :, i, j]
    if padding:
        out = out[:, :, padding:-padding, padding:-padding]
    return out


def _check_window(h: int, w: int, k: int, stride: int, padding: int, op: str) -> None:
    if k < 1 or stride < 1 or padding < 0:
        raise DimensionError(f"{op}: invalid k={k}, stride={stride}, padding={padding}")
    if k % 2 == 0:
        raise ParameterError(f"{op}: kernel size must be odd, got k={k}")
    if h + 2 * padding < k or w + 2 * padding < k:
        raise DimensionError(
            f"{op}: kernel {k}×{k} does not fit input {h}×{w} with padding {padding}"
        )


# ── Convolution ──────────────────────────────────────────────────────────


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """2-D cross-correlation: B×Cin×H×W with Cout×Cin×k×k → B×Cout×H'×W'."""
    _require_4d(x, "conv2d")
    if weight.ndim != 4 or weight.shape[1] != x.shape[1]:
        raise DimensionError(
            f"conv2d channel mismatch: input {x.shape} vs weight {weight.shape}"
        )
    cout, cin, k, k2 = weight.shape
    if k != k2:
        raise DimensionError(f"conv2d needs square kernels, got weight {weight.shape}")
    if bias is not None and bias.shape != (cout,):
        raise DimensionError(f"conv2d bias {bias.shape} does not match weight {weight.shape}")
    b, _, h, w = x.shape
    _check_window(h, w, k, stride, padding, "conv2d")
    ho, wo = _output_hw(h, w, k, stride, padding)

    cols = _im2col(x.data, k, stride, padding)  # B × (Cin·k·k) × L
    wmat = weight.data.reshape(cout, -1)
    out = np.matmul(wmat, cols)  # B × Cout × L
    if bias is not None:
        out = out + bias.data[None, :, None]
    out_t = Tensor.wrap(out.reshape(b, cout, ho, wo))

    def _backward(g: np.ndarray):
        g2 = g.reshape(b, cout, ho * wo)
        gw = gb = gx = None
        if weight.requires_grad:
            gw = np.einsum("bol,bdl->od", g2, cols).reshape(weight.shape)
        if bias is not None and bias.requires_grad:
            gb = g2.sum(axis=(0, 2))
        if x.requires_grad:
            gcols = np.matmul(wmat.T, g2)
            gx = _col2im(gcols, x.shape, k, stride, padding)
        return gx, gw, gb

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return record("conv2d", inputs, out_t, _backward)


# ── Pixel shuffle ────────────────────────────────────────────────────────


def _shuffle(a: np.ndarray, r: int) -> np.ndarray:
    b, c, h, w = a.shape
    oc = c // (r * r)
    return a.reshape(b, oc, r, r, h, w).transpose(0, 1, 4, 2, 5, 3).reshape(b, oc, h * r, w * r)


def _unshuffle(a: np.ndarray, r: int) -> np.ndarray:
    b, c, h, w = a.shape
    return (
        a.reshape(b, c, h // r, r, w // r, r)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(b, c * r * r, h // r, w // r)
    )


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """B×(C·r²)×H×W → B×C×(r·H)×(r·W): out[b,c,r·i+di,r·j+dj] = in[b,c·r²+di·r+dj,i,j]."""
    _require_4d(x, "pixel_shuffle")
    if r < 1 or x.shape[1] % (r * r):
        raise DimensionError(f"pixel_shuffle: channels of {x.shape} not divisible by r²={r * r}")
    out = Tensor.wrap(_shuffle(x.data, r))
    return record("pixel_shuffle", (x,), out, lambda g: (_unshuffle(g, r),))


def pixel_unshuffle(x: Tensor, r: int) -> Tensor:
    """Inverse of ``pixel_shuffle``."""
    _require_4d(x, "pixel_unshuffle")
    if r < 1 or x.shape[2] % r or x.shape[3] % r:
        raise DimensionError(f"pixel_unshuffle: spatial dims of {x.shape} not divisible by {r}")
    out = Tensor.wrap(_unshuffle(x.data, r))
    return record("pixel_unshuffle", (x,), out, lambda g: (_shuffle(g, r),))


# ── Unfold / fold / gather ───────────────────────────────────────────────


def unfold(x: Tensor, k: int, stride: int = 1, padding: int = 0) -> Tensor:
    """Sliding k×k patches: B×C×H×W → B×(C·k²)×L."""
    _require_4d(x, "unfold")
    _check_window(x.shape[2], x.shape[3], k, stride, padding, "unfold")
    out = Tensor.wrap(np.ascontiguousarray(_im2col(x.data, k, stride, padding)))
    shape = x.shape
    return record("unfold", (x,), out, lambda g: (_col2im(g, shape, k, stride, padding),))


def fold(
    cols: Tensor,
    output_size: tuple[int, int],
    k: int,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """Adjoint of ``unfold``: scatter-add patch columns back onto an H×W grid."""
    if cols.ndim != 3:
        raise DimensionError(f"fold expects B×(C·k²)×L, got {cols.shape}")
    b, d, n = cols.shape
    h, w = output_size
    _check_window(h, w, k, stride, padding, "fold")
    ho, wo = _output_hw(h, w, k, stride, padding)
    if d % (k * k) or n != ho * wo:
        raise DimensionError(
            f"fold: columns {cols.shape} incompatible with {h}×{w}, k={k}, stride={stride}"
        )
    shape = (b, d // (k * k), h, w)
    out = Tensor.wrap(_col2im(cols.data, shape, k, stride, padding))
    return record("fold", (cols,), out, lambda g: (_im2col(g, k, stride, padding),))


def overlap_count(h: int, w: int, k: int, stride: int = 1, padding: int = 0) -> np.ndarray:
    """How many unfold patches cover each pixel of an H×W grid (1×1×H×W)."""
    ones = np.ones((1, 1, h, w))
    return _col2im(_im2col(ones, k, stride, padding), (1, 1, h, w), k, stride, padding)


def index_select_columns(patches: Tensor, indices: np.ndarray) -> Tensor:
    """Gather columns per batch item: out[b,:,i] = patches[b,:,indices[b,i]].

    ``indices`` is an integer array of shape B×L'; it never carries gradients.
    """
    if patches.ndim != 3:
        raise DimensionError(f"index_select_columns expects B×D×L patches, got {patches.shape}")
    idx = np.asarray(indices)
    b, _, n = patches.shape
    if idx.ndim != 2 or idx.shape[0] != b:
        raise DimensionError(f"indices {idx.shape} do not match patches {patches.shape}")
    bad = np.argwhere((idx < 0) | (idx >= n))
    if bad.size:
        bi, i = (int(v) for v in bad[0])
        raise IndexBoundsError(
            f"index out of range [0, {n}): batch {bi}, position {i}, value {int(idx[bi, i])}"
        )
    rows = np.arange(b)[:, None]
    out = Tensor.wrap(patches.data[rows, :, idx].transpose(0, 2, 1))

    def _backward(g: np.ndarray):
        acc = np.zeros((b, n, patches.shape[1]), dtype=g.dtype)
        np.add.at(acc, (rows, idx), g.transpose(0, 2, 1))
        return (acc.transpose(0, 2, 1),)

    return record("index_select_columns", (patches,), out, _backward)


# ── Resampling ───────────────────────────────────────────────────────────


def _target_size(n: int, scale: Fraction) -> int:
    target = n * scale
    if target.denominator != 1 or target <= 0:
        raise DimensionError(f"resample: size {n} × scale {scale} is not a positive integer")
    return int(target)


def _interp_matrix(n_in: int, n_out: int, scale: Fraction, mode: ResampleMode) -> np.ndarray:
    """n_out × n_in interpolation weights along one axis."""
    dst = np.arange(n_out)
    mat = np.zeros((n_out, n_in))
    if mode == "nearest":
        src = np.minimum(np.floor(dst / float(scale)).astype(int), n_in - 1)
        mat[dst, src] = 1.0
        return mat
    src = np.clip((dst + 0.5) / float(scale) - 0.5, 0.0, None)
    i0 = np.minimum(np.floor(src).astype(int), n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    np.add.at(mat, (dst, i0), 1.0 - frac)
    np.add.at(mat, (dst, i1), frac)
    return mat


def resample(x: Tensor, scale: Fraction | int | float, mode: ResampleMode = "bilinear") -> Tensor:
    """Rescale the spatial dims by ``scale`` (both axes)."""
    _require_4d(x, "resample")
    if mode not in ("nearest", "bilinear"):
        raise ValueError(f"Unknown resample mode '{mode}'")
    frac = Fraction(scale).limit_denominator(1 << 16)
    if frac <= 0:
        raise DimensionError(f"resample scale must be positive, got {scale}")
    h, w = x.shape[2], x.shape[3]
    ah = _interp_matrix(h, _target_size(h, frac), frac, mode).astype(x.dtype)
    aw = _interp_matrix(w, _target_size(w, frac), frac, mode).astype(x.dtype)
    out = Tensor.wrap(ah @ x.data @ aw.T)
    return record("resample", (x,), out, lambda g: (ah.T @ g @ aw,))


# ── Elementwise ──────────────────────────────────────────────────────────


def _non_channel(t: Tensor) -> tuple[int, ...]:
    return (t.shape[0],) + t.shape[2:]


def _broadcast_pair(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape == b.shape or b.ndim == 0 or a.ndim == 0:
        return
    if op == "mul" and a.ndim == 4 and b.ndim == 4 and 1 in (a.shape[1], b.shape[1]):
        if _non_channel(a) == _non_channel(b):
            return
    raise DimensionError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


def _reduce_to(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    if len(shape) == 0:
        return np.asarray(g.sum())
    return g.sum(axis=1, keepdims=True)


def add(a: Tensor, b: Tensor | float) -> Tensor:
    b = _as_tensor(b, a)
    _broadcast_pair(a, b, "add")
    out = Tensor.wrap(a.data + b.data)
    return record("add", (a, b), out, lambda g: (_reduce_to(g, a.shape), _reduce_to(g, b.shape)))


def sub(a: Tensor, b: Tensor | float) -> Tensor:
    b = _as_tensor(b, a)
    _broadcast_pair(a, b, "sub")
    out = Tensor.wrap(a.data - b.data)
    return record("sub", (a, b), out, lambda g: (_reduce_to(g, a.shape), -_reduce_to(g, b.shape)))


def mul(a: Tensor, b: Tensor | float) -> Tensor:
    """Elementwise product; a 1-channel B×1×H×W map broadcasts across channels."""
    b = _as_tensor(b, a)
    _broadcast_pair(a, b, "mul")
    out = Tensor.wrap(a.data * b.data)

    def _backward(g: np.ndarray):
        ga = _reduce_to(g * b.data, a.shape) if a.requires_grad else None
        gb = _reduce_to(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return record("mul", (a, b), out, _backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = Tensor.wrap(np.where(mask, x.data, 0).astype(x.dtype))
    return record("relu", (x,), out, lambda g: (g * mask,))


def concat_channels(*tensors: Tensor) -> Tensor:
    """Concatenate B×Ci×H×W tensors along the channel axis."""
    if not tensors:
        raise DimensionError("concat_channels needs at least one tensor")
    first = tensors[0]
    for t in tensors:
        _require_4d(t, "concat_channels")
        if _non_channel(t) != _non_channel(first):
            raise DimensionError(
                f"concat_channels: non-channel dims differ: {first.shape} vs {t.shape}"
            )
    splits = np.cumsum([t.shape[1] for t in tensors])[:-1]
    out = Tensor.wrap(np.concatenate([t.data for t in tensors], axis=1))
    return record("concat_channels", tensors, out, lambda g: tuple(np.split(g, splits, axis=1)))


_BINARY = {"add": add, "sub": sub, "mul": mul}


def elementwise(
    a: Tensor,
    b: Tensor | float | None = None,
    op: Literal["add", "mul", "sub", "relu", "concat_channels"] = "add",
) -> Tensor:
    """Dispatch to one of the elementwise ops by name."""
    if op == "relu":
        return relu(a)
    if op == "concat_channels":
        if not isinstance(b, Tensor):
            raise DimensionError("concat_channels needs two tensors")
        return concat_channels(a, b)
    if op not in _BINARY or b is None:
        raise ValueError(f"Unknown or incomplete elementwise op '{op}'")
    return _BINARY[op](a, b)


# ── Reductions and loss ──────────────────────────────────────────────────


def sum_all(x: Tensor) -> Tensor:
    out = Tensor.wrap(np.asarray(x.data.sum(), dtype=x.dtype))
    return record("sum", (x,), out, lambda g: (np.broadcast_to(g, x.shape).astype(x.dtype),))


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute error over all elements."""
    if pred.shape != target.shape:
        raise DimensionError(f"l1_loss: pred {pred.shape} vs target {target.shape}")
    diff = pred.data - target.data.astype(pred.dtype, copy=False)
    n = diff.size
    out = Tensor.wrap(np.asarray(np.abs(diff).mean(), dtype=pred.dtype))

    def _backward(g: np.ndarray):
        s = np.sign(diff) * (g / n)
        return s, -s

    return record("l1_loss", (pred, target), out, _backward)
