"""
Cartesian phase-encode undersampling masks.

A mask keeps a fully sampled central band of columns and draws the remaining
budget uniformly without replacement from the other columns. The total budget
is round(width / acceleration).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from t2net.errors import ParameterError

logger = logging.getLogger("t2net.mri.mask")


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


@dataclass
class CartesianMask:
    """Binary column-sampling pattern over k-space columns."""

    width: int
    sampled: np.ndarray
    acceleration: float
    center_fraction: float
    seed: int

    def __post_init__(self) -> None:
        self.sampled = np.asarray(self.sampled, dtype=bool)
        if self.sampled.shape != (self.width,):
            raise ParameterError(
                f"mask has {self.sampled.shape} entries, expected ({self.width},)"
            )

    @classmethod
    def full(cls, width: int) -> CartesianMask:
        return cls(width, np.ones(width, dtype=bool), 1.0, 1.0, 0)

    @property
    def count(self) -> int:
        return int(self.sampled.sum())

    @property
    def fraction(self) -> float:
        return self.count / self.width

    def center_columns(self) -> np.ndarray:
        """Indices of the always-sampled central band."""
        n_center = _round_half_up(self.center_fraction * self.width)
        start = self.width // 2 - n_center // 2
        return np.arange(start, start + n_center)

    def with_columns(self, columns: np.ndarray) -> CartesianMask:
        """Copy of this mask with extra columns sampled."""
        sampled = self.sampled.copy()
        sampled[np.asarray(columns, dtype=int)] = True
        return CartesianMask(
            self.width, sampled, self.acceleration, self.center_fraction, self.seed
        )

    def metadata(self) -> dict:
        return {
            "width": self.width,
            "acceleration": self.acceleration,
            "center_fraction": self.center_fraction,
            "seed": self.seed,
        }


def make_cartesian_mask(
    width: int,
    acceleration: float,
    center_fraction: float,
    seed: int,
) -> CartesianMask:
    """Seeded mask with exactly round(width / acceleration) sampled columns."""
    if width < 1:
        raise ParameterError(f"mask width must be positive, got {width}")
    if acceleration < 1.0:
        raise ParameterError(f"acceleration must be ≥ 1, got {acceleration}")
    if not 0.0 < center_fraction <= 1.0 or center_fraction * width < 1.0:
        raise ParameterError(
            f"center_fraction {center_fraction} leaves no central column at width {width}"
        )
    budget = min(width, _round_half_up(width / acceleration))

    mask = CartesianMask(width, np.zeros(width, dtype=bool), acceleration, center_fraction, seed)
    center = mask.center_columns()
    if len(center) > budget:
        raise ParameterError(
            f"central band of {len(center)} columns exceeds the budget of {budget} "
            f"(width {width}, acceleration {acceleration})"
        )
    mask.sampled[center] = True
    remaining = np.flatnonzero(~mask.sampled)
    rng = np.random.default_rng(seed)
    extra = rng.choice(remaining, size=budget - len(center), replace=False)
    mask.sampled[extra] = True
    logger.debug(
        "Mask width=%d accel=%.2f: %d columns (%d central)",
        width, acceleration, budget, len(center),
    )
    return mask
