"""
Image-quality metrics: PSNR, SSIM and NMSE.

Unless given, ``data_range`` is the maximum of the target image. SSIM uses an
11×11 Gaussian window (σ = 1.5, K1 = 0.01, K2 = 0.03) via scikit-image.
"""

from __future__ import annotations

import logging

import numpy as np
from skimage.metrics import structural_similarity

from t2net.config import settings
from t2net.engine.tensor import Tensor
from t2net.errors import ContractError, DimensionError, ParameterError
from t2net.models.reports import MetricReport

logger = logging.getLogger("t2net.metrics")

SSIM_SIGMA = 1.5
SSIM_WINDOW = 11

ImageLike = Tensor | np.ndarray


def _as_image(x: ImageLike) -> np.ndarray:
    data = x.data if isinstance(x, Tensor) else np.asarray(x)
    return data.astype(np.float64)


def _pair(pred: ImageLike, target: ImageLike, metric: str) -> tuple[np.ndarray, np.ndarray]:
    p, t = _as_image(pred), _as_image(target)
    if p.shape != t.shape:
        raise DimensionError(f"{metric}: pred {p.shape} vs target {t.shape}")
    return p, t


def _plane(x: np.ndarray, metric: str) -> np.ndarray:
    """Squeeze leading singleton axes down to a 2-D image."""
    while x.ndim > 2 and x.shape[0] == 1:
        x = x[0]
    if x.ndim != 2:
        raise DimensionError(f"{metric} expects a single 2-D image, got shape {x.shape}")
    return x


def default_data_range(target: ImageLike) -> float:
    return float(_as_image(target).max())


def psnr(pred: ImageLike, target: ImageLike, data_range: float | None = None) -> float:
    """10·log10(range² / MSE), capped when the images are (numerically) identical."""
    p, t = _pair(pred, target, "psnr")
    dr = default_data_range(t) if data_range is None else float(data_range)
    if dr <= 0:
        raise ParameterError(f"psnr: data_range must be positive, got {dr}")
    mse = float(np.mean((p - t) ** 2))
    if mse < dr * dr * 1e-10:
        return settings.psnr_cap_db
    return float(10.0 * np.log10(dr * dr / mse))


def ssim(pred: ImageLike, target: ImageLike, data_range: float | None = None) -> float:
    """Mean local SSIM over an 11×11 Gaussian window."""
    p, t = _pair(pred, target, "ssim")
    p, t = _plane(p, "ssim"), _plane(t, "ssim")
    if min(p.shape) < SSIM_WINDOW:
        raise DimensionError(
            f"ssim needs images of at least {SSIM_WINDOW}×{SSIM_WINDOW}, got {p.shape}"
        )
    dr = default_data_range(t) if data_range is None else float(data_range)
    if dr <= 0:
        raise ParameterError(f"ssim: data_range must be positive, got {dr}")
    value = structural_similarity(
        t,
        p,
        data_range=dr,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
        K1=0.01,
        K2=0.03,
    )
    return float(np.clip(value, -1.0, 1.0))


def nmse(pred: ImageLike, target: ImageLike) -> float:
    """‖pred − target‖² / ‖target‖²."""
    p, t = _pair(pred, target, "nmse")
    denom = float(np.sum(t * t))
    if denom == 0.0:
        raise ContractError("nmse: target has zero norm")
    return float(np.sum((p - t) ** 2) / denom)


def compute_metrics(pred: ImageLike, target: ImageLike) -> MetricReport:
    """All three metrics for one image pair, with data_range = target max."""
    dr = default_data_range(target)
    return MetricReport(
        psnr_db=psnr(pred, target, dr),
        ssim=ssim(pred, target, dr),
        nmse=nmse(pred, target),
    )
