"""
Centered, orthonormal 2-D Fourier transforms on power-of-two grids.

k-space is stored with DC at the grid center (fftshift convention) so that
"outer part" truncation is a central crop. The transform itself is an
iterative radix-2 decimation-in-time FFT applied along each axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from t2net.errors import DimensionError


@dataclass
class ComplexGrid:
    """Complex-valued h×w array (image or k-space)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 2:
            raise DimensionError(f"ComplexGrid needs a 2-D array, got shape {self.data.shape}")

    @classmethod
    def from_parts(cls, re: np.ndarray, im: np.ndarray) -> ComplexGrid:
        return cls(np.asarray(re) + 1j * np.asarray(im))

    @classmethod
    def from_real(cls, img: np.ndarray) -> ComplexGrid:
        return cls(np.asarray(img, dtype=np.float64).reshape(np.shape(img)[-2:]))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def re(self) -> np.ndarray:
        return self.data.real

    @property
    def im(self) -> np.ndarray:
        return self.data.imag

    def magnitude(self) -> np.ndarray:
        return np.abs(self.data)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.data) ** 2))


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft_axis(a: np.ndarray, axis: int = -1, inverse: bool = False) -> np.ndarray:
    """Unnormalized radix-2 DFT along one axis (sign +1 when ``inverse``)."""
    x = np.moveaxis(np.asarray(a, dtype=np.complex128), axis, -1)
    n = x.shape[-1]
    if not is_power_of_two(n):
        raise DimensionError(f"FFT length {n} is not a power of two")
    lead = x.shape[:-1]
    x = x[..., _bit_reversal(n)]
    sign = 1.0 if inverse else -1.0
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        blocks = x.reshape(*lead, n // size, size)
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        x = np.concatenate([even + odd, even - odd], axis=-1).reshape(*lead, n)
        size *= 2
    return np.moveaxis(x, -1, axis)


def _check_grid(grid: ComplexGrid) -> None:
    if not (is_power_of_two(grid.height) and is_power_of_two(grid.width)):
        raise DimensionError(
            f"FFT needs power-of-two dimensions, got {grid.height}×{grid.width}"
        )


def fft2(img: ComplexGrid) -> ComplexGrid:
    """Image → centered k-space, scaled by 1/√(hw)."""
    _check_grid(img)
    x = np.fft.ifftshift(img.data)
    k = fft_axis(fft_axis(x, axis=0), axis=1)
    return ComplexGrid(np.fft.fftshift(k) / np.sqrt(img.height * img.width))


def ifft2(ksp: ComplexGrid) -> ComplexGrid:
    """Centered k-space → image, scaled by 1/√(hw)."""
    _check_grid(ksp)
    k = np.fft.ifftshift(ksp.data)
    x = fft_axis(fft_axis(k, axis=0, inverse=True), axis=1, inverse=True)
    return ComplexGrid(np.fft.fftshift(x) / np.sqrt(ksp.height * ksp.width))
