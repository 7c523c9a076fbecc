"""
Dataset directories of simulated slices.

Layout:
    <dir>/manifest.txt          slice name → phantom seed, plus generation settings
    <dir>/slice_0000.t2s        container with input_lr, target_rec, target_sr
    <dir>/slice_0000.txt        mask metadata + scale sidecar

The mask is not stored; it is rebuilt from its sidecar metadata.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from t2net.engine.checkpoint import load_arrays, save_arrays
from t2net.engine.tensor import Tensor
from t2net.errors import ArtifactFormatError, DimensionError
from t2net.io.sidecar import read_sidecar, write_sidecar
from t2net.mri.fft import is_power_of_two
from t2net.mri.mask import CartesianMask, make_cartesian_mask
from t2net.mri.phantom import generate_phantom
from t2net.mri.sample import SampleTriple, make_sample
from t2net.models.mri import PhantomSpec

logger = logging.getLogger("t2net.mri.dataset")

MANIFEST_NAME = "manifest.txt"
SAMPLE_SUFFIX = ".t2s"


class DatasetSpec(BaseModel):
    """Generation settings of a dataset directory."""

    slices: int = Field(default=16, ge=0)
    size: int = Field(default=64, ge=16)
    scale: int = 2
    acceleration: float = Field(default=6.0, ge=1.0)
    center_fraction: float = 0.0625
    seed: int = Field(default=0, ge=0)
    phantom: str = "random"


def slice_name(index: int) -> str:
    return f"slice_{index:04d}"


def slice_seeds(seed: int, count: int) -> list[int]:
    """Independent per-slice phantom seeds derived from the dataset seed."""
    if count == 0:
        return []
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


def write_sample(directory: Path, name: str, sample: SampleTriple) -> Path:
    path = directory / f"{name}{SAMPLE_SUFFIX}"
    save_arrays(
        path,
        {
            "input_lr": sample.input_lr.data,
            "target_rec": sample.target_rec.data,
            "target_sr": sample.target_sr.data,
        },
    )
    write_sidecar(directory / f"{name}.txt", {**sample.mask.metadata(), "scale": sample.scale})
    return path


def read_sample(path: Path | str) -> SampleTriple:
    path = Path(path)
    arrays = load_arrays(path)
    missing = {"input_lr", "target_rec", "target_sr"} - arrays.keys()
    if missing:
        raise ArtifactFormatError(f"{path}: missing arrays {sorted(missing)}")
    meta = read_sidecar(path.with_suffix(".txt"))
    try:
        mask = make_cartesian_mask(
            int(meta["width"]),
            float(meta["acceleration"]),
            float(meta["center_fraction"]),
            int(meta["seed"]),
        )
        scale = int(meta["scale"])
    except KeyError as e:
        raise ArtifactFormatError(f"{path}: sidecar lacks key {e}") from e
    return SampleTriple(
        input_lr=Tensor.wrap(arrays["input_lr"]),
        target_rec=Tensor.wrap(arrays["target_rec"]),
        target_sr=Tensor.wrap(arrays["target_sr"]),
        scale=scale,
        mask=mask,
    )


def _make_slice(spec: DatasetSpec, mask: CartesianMask, seed: int) -> SampleTriple:
    phantom = generate_phantom(PhantomSpec(size=spec.size, kind=spec.phantom, seed=seed))
    return make_sample(phantom, mask, spec.scale)


def simulate_slices(spec: DatasetSpec, threads: int = 1) -> list[SampleTriple]:
    """All slices of a dataset, in slice order. One mask (seeded by ``spec.seed``) is shared."""
    if not is_power_of_two(spec.size) or spec.size % spec.scale:
        raise DimensionError(
            f"size {spec.size} must be a power of two divisible by scale {spec.scale}"
        )
    mask = make_cartesian_mask(spec.size, spec.acceleration, spec.center_fraction, spec.seed)
    seeds = slice_seeds(spec.seed, spec.slices)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(lambda s: _make_slice(spec, mask, s), seeds))


def generate_dataset(directory: Path | str, spec: DatasetSpec, threads: int = 1) -> list[Path]:
    """Simulate ``spec.slices`` phantoms and write them with a manifest."""
    samples = simulate_slices(spec, threads)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    seeds = slice_seeds(spec.seed, spec.slices)
    paths = [write_sample(directory, slice_name(i), s) for i, s in enumerate(samples)]
    manifest = spec.model_dump()
    manifest.update({slice_name(i): seed for i, seed in enumerate(seeds)})
    write_sidecar(directory / MANIFEST_NAME, manifest, header="t2net dataset manifest")
    logger.info(
        "Wrote %d slices (%d×%d, scale %d, %.1f× mask) to %s",
        len(paths), spec.size, spec.size, spec.scale, spec.acceleration, directory,
    )
    return paths


def sample_paths(directory: Path | str) -> list[Path]:
    directory = Path(directory)
    if not (directory / MANIFEST_NAME).is_file():
        raise FileNotFoundError(f"No dataset manifest in {directory}")
    return sorted(directory.glob(f"slice_*{SAMPLE_SUFFIX}"))


def load_dataset(directory: Path | str) -> list[SampleTriple]:
    return [read_sample(p) for p in sample_paths(directory)]


def dataset_checksum(directory: Path | str) -> str:
    """SHA-256 over the manifest and every slice file, in name order."""
    directory = Path(directory)
    digest = hashlib.sha256()
    for path in [directory / MANIFEST_NAME, *sample_paths(directory)]:
        digest.update(path.name.encode("utf-8"))
        digest.update(path.read_bytes())
        sidecar = path.with_suffix(".txt")
        if path.suffix == SAMPLE_SUFFIX and sidecar.is_file():
            digest.update(sidecar.read_bytes())
    return digest.hexdigest()
