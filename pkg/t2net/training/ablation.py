"""
Ablation runs: the SR-only network, additive fusion without task
transformers, and the full network, trained on the same data with the same
seed and reported in that order.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

from pydantic import BaseModel

from t2net.models.configs import TrainConfig, Variant
from t2net.models.reports import AblationRow
from t2net.mri.sample import SampleTriple
from t2net.training.evaluate import format_row, table_header
from t2net.training.evaluate import evaluate as evaluate_params
from t2net.training.trainer import train

logger = logging.getLogger("t2net.training.ablation")

ABLATION_ORDER = (Variant.NO_REC, Variant.NO_TT, Variant.FULL)
ROW_LABELS = {Variant.NO_REC: "w/o Rec", Variant.NO_TT: "w/o H^tt", Variant.FULL: "T2Net"}

# full may trail no_rec by at most this much before the trend check fails
TREND_TOLERANCE_DB = 0.5


class TrendReport(BaseModel):
    sr_psnr: dict[str, float]
    expected_order: bool
    failed: bool


def run_ablation(
    dataset: Sequence[SampleTriple],
    cfg: TrainConfig,
    variants: Sequence[Variant] = ABLATION_ORDER,
) -> list[AblationRow]:
    rows: list[AblationRow] = []
    for variant in variants:
        run_cfg = cfg.with_variant(variant)
        logger.info("Ablation: training %s", variant.value)
        params, log = train(dataset, run_cfg)
        rows.append(
            AblationRow(
                variant=variant,
                evaluation=evaluate_params(params, dataset),
                final_loss=log.final_loss,
            )
        )
    return rows


def format_ablation(rows: Sequence[AblationRow]) -> str:
    """One row per variant, SR and Rec PSNR/SSIM/NMSE columns."""
    lines = [table_header()]
    for row in rows:
        ev = row.evaluation
        lines.append(format_row(ROW_LABELS[row.variant], ev.sr, ev.rec))
    return "\n".join(lines)


def ablation_trend(rows: Sequence[AblationRow]) -> TrendReport:
    """Check full ≥ no_tt ≥ no_rec on SR PSNR; only full ≪ no_rec counts as failure."""
    psnr = {row.variant.value: row.evaluation.sr.psnr_db for row in rows}
    full = psnr.get(Variant.FULL.value)
    no_tt = psnr.get(Variant.NO_TT.value)
    no_rec = psnr.get(Variant.NO_REC.value)
    if full is None or no_tt is None or no_rec is None:
        return TrendReport(sr_psnr=psnr, expected_order=False, failed=False)
    return TrendReport(
        sr_psnr=psnr,
        expected_order=full >= no_tt >= no_rec,
        failed=full < no_rec - TREND_TOLERANCE_DB,
    )
