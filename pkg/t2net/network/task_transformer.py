"""
Task transformer: moves artifact-free structure from the Rec branch into the
SR branch.

    Q = F_SR + F_Rec (or F_SR),  K = F_Rec,  V = F_Rec ↑↓
    r_ij = <q_i/|q_i|, k_j/|k_j|>   over unfolded patches
    T_i  = argmax_j r_ij,  S_i = max_j r_ij
    C    = fold(gather(unfold(V), T))
    Z    = Conv_z(concat(C, Q))
    F_TT = Q + Conv_out(Z) ⊗ S

T and S are constants for differentiation: no gradient flows through the
relevance computation into Q or K.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from t2net.config import settings
from t2net.engine import ops
from t2net.engine.tensor import Tensor
from t2net.errors import DimensionError
from t2net.models.configs import ModelConfig, QueryMode
from t2net.network.layers import conv3x3
from t2net.network.params import T2NetParams

logger = logging.getLogger("t2net.network.task_transformer")


@dataclass
class AttentionOutputs:
    """Hard-attention indices T (B×L), soft map S (B×1×h×w) and transferred features C."""

    transfer_index: np.ndarray
    soft_map: Tensor
    transferred: Tensor | None = None


def _normalized_patches(x: np.ndarray, patch_k: int) -> np.ndarray:
    """Unit-norm unfolded patches (B×D×L); zero-norm patches stay zero."""
    pad = (patch_k - 1) // 2
    cols = ops.unfold(Tensor.wrap(x), patch_k, 1, pad).data
    norms = np.linalg.norm(cols, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return np.where(norms > 0, cols / safe, 0.0)


def relevance_embedding(
    q: Tensor,
    k: Tensor,
    patch_k: int = 3,
    chunk_rows: int | None = None,
) -> tuple[np.ndarray, Tensor]:
    """Best-matching key patch (T) and its cosine similarity (S) for every query patch.

    Rows of the L×L relevance matrix are streamed in blocks of ``chunk_rows``;
    the full matrix is never held in memory. Ties go to the lowest index.
    """
    if q.shape != k.shape or q.ndim != 4:
        raise DimensionError(f"relevance_embedding: Q {q.shape} and K {k.shape} must match")
    b, _, h, w = q.shape
    qn = _normalized_patches(q.data, patch_k)
    kn = _normalized_patches(k.data, patch_k)
    n = h * w
    rows = chunk_rows or settings.relevance_chunk_rows

    t = np.zeros((b, n), dtype=np.int64)
    s = np.zeros((b, n), dtype=q.dtype)
    for bi in range(b):
        keys = kn[bi]
        for start in range(0, n, rows):
            block = qn[bi][:, start:start + rows].T @ keys  # rows × L
            best = np.argmax(block, axis=1)
            t[bi, start:start + rows] = best
            s[bi, start:start + rows] = block[np.arange(block.shape[0]), best]
    s = np.clip(s, -1.0, 1.0)
    return t, Tensor.wrap(s.reshape(b, 1, h, w))


def transfer_features(v: Tensor, transfer_index: np.ndarray, patch_k: int = 3) -> Tensor:
    """Gather V's patches by T and fold them back, averaging overlaps.

    With T the identity the result equals V.
    """
    if v.ndim != 4:
        raise DimensionError(f"transfer_features expects B×C×H×W, got {v.shape}")
    b, _, h, w = v.shape
    pad = (patch_k - 1) // 2
    cols = ops.unfold(v, patch_k, 1, pad)
    picked = ops.index_select_columns(cols, transfer_index)
    folded = ops.fold(picked, (h, w), patch_k, 1, pad)
    inv = 1.0 / ops.overlap_count(h, w, patch_k, 1, pad)
    return ops.mul(folded, Tensor.wrap(np.broadcast_to(inv, (b, 1, h, w)).astype(v.dtype)))


def resample_value(f_rec: Tensor, scale: int) -> Tensor:
    """V = F_Rec upsampled by ``scale`` then downsampled back (bilinear)."""
    if scale == 1:
        return f_rec
    up = ops.resample(f_rec, scale, "bilinear")
    return ops.resample(up, Fraction(1, scale), "bilinear")


def task_transformer_forward(
    f_sr: Tensor,
    f_rec: Tensor,
    params: T2NetParams,
    stage: int,
    cfg: ModelConfig | None = None,
    frozen: AttentionOutputs | None = None,
) -> tuple[Tensor, AttentionOutputs]:
    """One H^tt module; returns F_TT and the attention maps it used.

    ``frozen`` replays previously computed T and S instead of recomputing them.
    """
    cfg = cfg or params.config
    if f_sr.shape != f_rec.shape:
        raise DimensionError(f"task transformer: F_SR {f_sr.shape} vs F_Rec {f_rec.shape}")
    q = ops.add(f_sr, f_rec) if cfg.query_mode == QueryMode.SUM else f_sr
    v = resample_value(f_rec, cfg.scale)
    if frozen is None:
        t, s = relevance_embedding(q, f_rec, cfg.patch_k)
    else:
        t, s = frozen.transfer_index, frozen.soft_map
    c = transfer_features(v, t, cfg.patch_k)
    z = conv3x3(ops.concat_channels(c, q), params.conv(f"tt.{stage}.conv_z"))
    out = ops.add(q, ops.mul(conv3x3(z, params.conv(f"tt.{stage}.conv_out")), s))
    return out, AttentionOutputs(transfer_index=t, soft_map=s, transferred=c)
