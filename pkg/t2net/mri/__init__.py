"""Acquisition simulator: Fourier transforms, Cartesian masks, phantoms and datasets."""

from t2net.mri.fft import ComplexGrid, fft2, ifft2
from t2net.mri.mask import CartesianMask, make_cartesian_mask
from t2net.mri.phantom import generate_phantom
from t2net.mri.sample import SampleTriple, degrade_lr, make_sample, undersample

__all__ = [
    "CartesianMask",
    "ComplexGrid",
    "SampleTriple",
    "degrade_lr",
    "fft2",
    "generate_phantom",
    "ifft2",
    "make_cartesian_mask",
    "make_sample",
    "undersample",
]
