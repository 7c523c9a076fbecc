"""
8-bit image export: binary PGM (P5) always, PNG optionally.

Images in [0, 1] map to 0..255 with rounding; values outside are clipped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from t2net.errors import ArtifactFormatError, DimensionError

logger = logging.getLogger("t2net.io.images")


def _plane(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    while image.ndim > 2 and image.shape[0] == 1:
        image = image[0]
    if image.ndim != 2:
        raise DimensionError(f"expected a single 2-D image, got shape {image.shape}")
    return image


def to_uint8(image: np.ndarray, scale: float = 255.0) -> np.ndarray:
    """round(image · scale) clipped to 0..255."""
    values = np.rint(_plane(image).astype(np.float64) * scale)
    return np.clip(values, 0, 255).astype(np.uint8)


def pgm_bytes(pixels: np.ndarray) -> bytes:
    pixels = _plane(pixels)
    if pixels.dtype != np.uint8:
        raise DimensionError(f"PGM pixels must be uint8, got {pixels.dtype}")
    h, w = pixels.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(pixels).tobytes()


def write_pgm(path: Path | str, pixels: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(pgm_bytes(pixels))
    return path


def read_pgm(path: Path | str) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5" or parts[2] != b"255":
        raise ArtifactFormatError(f"{path}: not an 8-bit binary PGM")
    w, h = (int(v) for v in parts[1].split())
    pixels = np.frombuffer(parts[3], dtype=np.uint8)
    if pixels.size != w * h:
        raise ArtifactFormatError(f"{path}: expected {w * h} pixels, found {pixels.size}")
    return pixels.reshape(h, w)


@dataclass
class ErrorMap:
    pixels: np.ndarray
    scale: float  # pixel = |x' − x| · scale


def error_map(pred: np.ndarray, target: np.ndarray) -> ErrorMap:
    """|pred − target| stretched so its maximum maps to 255 (all zero if identical)."""
    pred, target = _plane(pred), _plane(target)
    if pred.shape != target.shape:
        raise DimensionError(f"error map: pred {pred.shape} vs target {target.shape}")
    err = np.abs(pred.astype(np.float64) - target.astype(np.float64))
    peak = float(err.max())
    scale = 255.0 / peak if peak > 0 else 0.0
    return ErrorMap(pixels=to_uint8(err, scale), scale=scale)


def write_png(path: Path | str, pixels: np.ndarray) -> Path | None:
    """Write the same 8-bit pixels as a grayscale PNG; None if matplotlib is missing."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        logger.warning("matplotlib not available; skipping PNG export")
        return None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    plt.imsave(path, _plane(pixels), cmap="gray", vmin=0, vmax=255)
    return path
