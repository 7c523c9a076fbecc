"""
Evaluation of both outputs against their targets, plus input baselines.

Baselines:
    SR   bicubic-upsampled zero-filled input x̂_LR  vs x
    Rec  zero-filled input x̂_LR itself              vs x_LR

Metrics are computed per slice and averaged over slices.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from skimage.transform import resize

from t2net.config import settings
from t2net.errors import ContractError
from t2net.metrics import compute_metrics
from t2net.models.configs import Variant
from t2net.models.reports import EvaluationReport, MetricReport
from t2net.mri.sample import SampleTriple
from t2net.network.params import T2NetParams
from t2net.network.t2net import t2net_forward

logger = logging.getLogger("t2net.training.evaluate")

# (x', x'_LR or None) for one slice
Predictor = Callable[[SampleTriple], tuple[np.ndarray, np.ndarray | None]]


def bicubic_upsample(image: np.ndarray, scale: int) -> np.ndarray:
    """Order-3 spline resize of a 2-D image by an integer factor."""
    h, w = image.shape
    return resize(
        image.astype(np.float64),
        (h * scale, w * scale),
        order=3,
        mode="reflect",
        anti_aliasing=False,
        preserve_range=True,
    )


def model_predictor(params: T2NetParams) -> Predictor:
    def _predict(sample: SampleTriple) -> tuple[np.ndarray, np.ndarray | None]:
        x_sr, x_rec = t2net_forward(sample.input_lr, params)
        return x_sr.data, (x_rec.data if x_rec is not None else None)

    return _predict


def target_predictor(sample: SampleTriple) -> tuple[np.ndarray, np.ndarray | None]:
    """Returns the targets themselves; evaluates the metric ceiling."""
    return sample.target_sr.data, sample.target_rec.data


@dataclass
class SliceMetrics:
    sr: MetricReport
    rec: MetricReport | None
    sr_baseline: MetricReport
    rec_baseline: MetricReport


def evaluate_slice(sample: SampleTriple, predict: Predictor) -> SliceMetrics:
    x_sr, x_rec = predict(sample)
    zero_filled = sample.input_lr.data[0, 0]
    return SliceMetrics(
        sr=compute_metrics(x_sr, sample.target_sr.data),
        rec=compute_metrics(x_rec, sample.target_rec.data) if x_rec is not None else None,
        sr_baseline=compute_metrics(
            bicubic_upsample(zero_filled, sample.scale), sample.target_sr.data[0, 0]
        ),
        rec_baseline=compute_metrics(sample.input_lr.data, sample.target_rec.data),
    )


def evaluate(
    params: T2NetParams | None,
    dataset: Sequence[SampleTriple],
    predictor: Predictor | None = None,
    threads: int | None = None,
) -> EvaluationReport:
    """Average SR/Rec metrics and their baselines over ``dataset``.

    Pass ``predictor`` to score something other than ``params`` (e.g.
    ``target_predictor``).
    """
    if not dataset:
        raise ContractError("cannot evaluate an empty dataset")
    if predictor is None:
        if params is None:
            raise ContractError("evaluate needs parameters or a predictor")
        predictor = model_predictor(params)
    workers = threads or settings.threads
    with ThreadPoolExecutor(max_workers=workers) as pool:
        per_slice = list(pool.map(lambda s: evaluate_slice(s, predictor), dataset))

    recs = [m.rec for m in per_slice if m.rec is not None]
    variant = params.config.variant if params is not None else Variant.FULL
    report = EvaluationReport(
        sr=MetricReport.average([m.sr for m in per_slice]),
        rec=MetricReport.average(recs) if recs else None,
        sr_baseline=MetricReport.average([m.sr_baseline for m in per_slice]),
        rec_baseline=MetricReport.average([m.rec_baseline for m in per_slice]),
        num_slices=len(per_slice),
        scale=dataset[0].scale,
        variant=variant,
    )
    logger.info(
        "Evaluated %d slices: SR %.3f dB (bicubic %.3f dB)",
        report.num_slices, report.sr.psnr_db, report.sr_baseline.psnr_db,
    )
    return report


# ── Tables and records ───────────────────────────────────────────────────

METRIC_COLUMNS = ("PSNR", "SSIM", "NMSE")


def _metric_cells(report: MetricReport | None) -> list[str]:
    if report is None:
        return ["-", "-", "-"]
    return [f"{report.psnr_db:.3f}", f"{report.ssim:.4f}", f"{report.nmse:.5f}"]


def format_row(label: str, sr: MetricReport, rec: MetricReport | None) -> str:
    return " | ".join([f"{label:<16}", *_metric_cells(sr), *_metric_cells(rec)])


def table_header() -> str:
    cols = [f"SR {c}" for c in METRIC_COLUMNS] + [f"Rec {c}" for c in METRIC_COLUMNS]
    return " | ".join([f"{'':<16}", *cols])


def format_evaluation(report: EvaluationReport) -> str:
    """Metric table: the model row followed by the baseline row."""
    lines = [
        table_header(),
        format_row(report.variant.value, report.sr, report.rec),
        format_row("zero-filled", report.sr_baseline, report.rec_baseline),
    ]
    return "\n".join(lines)


def evaluation_record(report: EvaluationReport, dataset: str = "") -> dict[str, object]:
    """Flat key/value record of a report (sidecar format)."""
    record: dict[str, object] = {
        "dataset": dataset,
        "scale": report.scale,
        "variant": report.variant.value,
        "num_slices": report.num_slices,
    }
    named = {
        "sr": report.sr,
        "rec": report.rec,
        "sr_baseline": report.sr_baseline,
        "rec_baseline": report.rec_baseline,
    }
    for prefix, metrics in named.items():
        if metrics is None:
            continue
        record[f"{prefix}_psnr_db"] = metrics.psnr_db
        record[f"{prefix}_ssim"] = metrics.ssim
        record[f"{prefix}_nmse"] = metrics.nmse
    return record
