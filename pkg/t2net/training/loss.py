"""Joint ℓ1 objective: α·‖x − x'‖₁ + β·‖x_LR − x'_LR‖₁."""

from __future__ import annotations

from dataclasses import dataclass

from t2net.engine import ops
from t2net.engine.tensor import Tensor


@dataclass
class LossTerms:
    """Weighted total plus the two unweighted ℓ1 terms (rec_term is 0 without a Rec output)."""

    total: Tensor
    sr_term: Tensor
    rec_term: Tensor | None

    def as_floats(self) -> tuple[float, float, float]:
        rec = self.rec_term.item() if self.rec_term is not None else 0.0
        return self.total.item(), self.sr_term.item(), rec


def loss_terms(
    x_sr: Tensor,
    target_sr: Tensor,
    x_rec: Tensor | None,
    target_rec: Tensor | None,
    alpha: float,
    beta: float,
) -> LossTerms:
    sr_term = ops.l1_loss(x_sr, target_sr)
    total = ops.mul(sr_term, alpha)
    rec_term = None
    if x_rec is not None and target_rec is not None:
        rec_term = ops.l1_loss(x_rec, target_rec)
        total = ops.add(total, ops.mul(rec_term, beta))
    return LossTerms(total=total, sr_term=sr_term, rec_term=rec_term)


def multitask_loss(
    x_sr: Tensor,
    target_sr: Tensor,
    x_rec: Tensor | None,
    target_rec: Tensor | None,
    alpha: float = 0.2,
    beta: float = 0.8,
) -> Tensor:
    """Scalar joint loss; the β term is dropped when there is no Rec output."""
    return loss_terms(x_sr, target_sr, x_rec, target_rec, alpha, beta).total
