"""
Acquisition forward model: undersampling, k-space truncation and the
(input, Rec target, SR target) triple a training slice is made of.

    y      = fft2(x)
    x_LR   = |ifft2(degrade_lr(y, s))|
    x̂_LR   = |ifft2(degrade_lr(M ⊙ y, s))|
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from t2net.engine.tensor import Tensor
from t2net.errors import DimensionError
from t2net.mri.fft import ComplexGrid, fft2, ifft2, is_power_of_two
from t2net.mri.mask import CartesianMask


@dataclass
class SampleTriple:
    """One training slice: network input plus both supervision targets."""

    input_lr: Tensor
    target_rec: Tensor
    target_sr: Tensor
    scale: int
    mask: CartesianMask

    def __post_init__(self) -> None:
        lr_hw = self.target_rec.shape[-2:]
        hr_hw = self.target_sr.shape[-2:]
        if self.input_lr.shape != self.target_rec.shape:
            raise DimensionError(
                f"input_lr {self.input_lr.shape} and target_rec {self.target_rec.shape} differ"
            )
        if hr_hw != (lr_hw[0] * self.scale, lr_hw[1] * self.scale):
            raise DimensionError(
                f"target_sr {hr_hw} is not {self.scale}× target_rec {lr_hw}"
            )


def undersample(ksp: ComplexGrid, mask: CartesianMask) -> ComplexGrid:
    """Keep the sampled columns verbatim, zero the rest (ŷ = M ⊙ y)."""
    if mask.width != ksp.width:
        raise DimensionError(f"mask width {mask.width} does not match k-space width {ksp.width}")
    return ComplexGrid(ksp.data * mask.sampled[None, :])


def degrade_lr(ksp: ComplexGrid, s: int) -> ComplexGrid:
    """Central (h/s)×(w/s) block of centered k-space, scaled by 1/s.

    The 1/s factor keeps image-domain intensities unchanged under the
    orthonormal transforms.
    """
    if s < 1 or ksp.height % s or ksp.width % s:
        raise DimensionError(f"k-space {ksp.height}×{ksp.width} is not divisible by scale {s}")
    if s == 1:
        return ComplexGrid(ksp.data.copy())
    h, w = ksp.height // s, ksp.width // s
    top = ksp.height // 2 - h // 2
    left = ksp.width // 2 - w // 2
    return ComplexGrid(ksp.data[top:top + h, left:left + w] / s)


def lr_images(hr: np.ndarray, mask: CartesianMask, s: int) -> tuple[np.ndarray, np.ndarray]:
    """(x̂_LR, x_LR) magnitude images for an HR image, before normalization."""
    y = fft2(ComplexGrid.from_real(hr))
    target_rec = ifft2(degrade_lr(y, s)).magnitude()
    input_lr = ifft2(degrade_lr(undersample(y, mask), s)).magnitude()
    return input_lr, target_rec


def make_sample(hr: Tensor | np.ndarray, mask: CartesianMask, s: int) -> SampleTriple:
    """Simulate one acquisition and build its training triple.

    All three images are divided by the maximum of the HR image.
    """
    img = np.asarray(hr.data if isinstance(hr, Tensor) else hr, dtype=np.float64)
    img = img.reshape(img.shape[-2:])
    h, w = img.shape
    if not (is_power_of_two(h) and is_power_of_two(w)):
        raise DimensionError(f"HR image {h}×{w} must have power-of-two dimensions")
    if h % s or w % s:
        raise DimensionError(f"HR image {h}×{w} is not divisible by scale {s}")
    peak = float(img.max())
    norm = peak if peak > 0 else 1.0
    img = img / norm

    input_lr, target_rec = lr_images(img, mask, s)
    return SampleTriple(
        input_lr=Tensor(input_lr[None, None]),
        target_rec=Tensor(target_rec[None, None]),
        target_sr=Tensor(img[None, None]),
        scale=s,
        mask=mask,
    )
