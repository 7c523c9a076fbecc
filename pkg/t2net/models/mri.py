"""Phantom descriptions used to synthesize training slices."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class Ellipse(BaseModel):
    """One ellipse on the [-1, 1]² image plane (y axis pointing up)."""

    model_config = ConfigDict(frozen=True)

    intensity: float
    semi_x: float = Field(gt=0.0)
    semi_y: float = Field(gt=0.0)
    center_x: float = 0.0
    center_y: float = 0.0
    angle_deg: float = 0.0


class PhantomSpec(BaseModel):
    """Deterministic recipe for one synthetic slice."""

    model_config = ConfigDict(frozen=True)

    size: int = Field(default=64, ge=16)
    kind: Literal["random", "shepp_logan"] = "random"
    num_ellipses: int = Field(default=8, ge=0)
    intensity_range: tuple[float, float] = (0.1, 0.6)
    axis_range: tuple[float, float] = (0.05, 0.45)
    rotation_range: tuple[float, float] = (0.0, 180.0)
    center_range: tuple[float, float] = (-0.5, 0.5)
    supersample: int = Field(default=4, ge=1)
    seed: int = Field(default=0, ge=0)
