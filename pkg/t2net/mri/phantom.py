"""
Synthetic ellipse phantoms standing in for real MR slices.

Images live on the [-1, 1]² plane sampled at pixel centers; each pixel is
supersampled so ellipse edges are anti-aliased. Intensities add up and the
result is clamped to [0, 1].
"""

from __future__ import annotations

import numpy as np

from t2net.engine.tensor import Tensor
from t2net.models.mri import Ellipse, PhantomSpec

# Modified Shepp–Logan table: intensity, semi_x, semi_y, center_x, center_y, angle.
_SHEPP_LOGAN = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
)


def shepp_logan_ellipses() -> list[Ellipse]:
    return [
        Ellipse(intensity=a, semi_x=sx, semi_y=sy, center_x=cx, center_y=cy, angle_deg=ang)
        for a, sx, sy, cx, cy, ang in _SHEPP_LOGAN
    ]


def random_ellipses(spec: PhantomSpec) -> list[Ellipse]:
    """Draw ``spec.num_ellipses`` ellipses from the spec's ranges (pure in seed)."""
    rng = np.random.default_rng(spec.seed)
    out = []
    for _ in range(spec.num_ellipses):
        cx, cy = rng.uniform(*spec.center_range, size=2)
        sx, sy = rng.uniform(*spec.axis_range, size=2)
        out.append(
            Ellipse(
                intensity=float(rng.uniform(*spec.intensity_range)),
                semi_x=float(sx),
                semi_y=float(sy),
                center_x=float(cx),
                center_y=float(cy),
                angle_deg=float(rng.uniform(*spec.rotation_range)),
            )
        )
    return out


def render_ellipses(size: int, ellipses: list[Ellipse], supersample: int = 4) -> np.ndarray:
    """Rasterize ellipses onto a size×size grid with per-pixel coverage."""
    n = size * supersample
    # Sub-pixel centers; y axis points up (row 0 is the top).
    coords = (np.arange(n) + 0.5) / n * 2.0 - 1.0
    xx, yy = np.meshgrid(coords, -coords)
    img = np.zeros((n, n))
    for e in ellipses:
        phi = np.deg2rad(e.angle_deg)
        dx, dy = xx - e.center_x, yy - e.center_y
        u = dx * np.cos(phi) + dy * np.sin(phi)
        v = dy * np.cos(phi) - dx * np.sin(phi)
        inside = (u / e.semi_x) ** 2 + (v / e.semi_y) ** 2 <= 1.0
        img[inside] += e.intensity
    img = img.reshape(size, supersample, size, supersample).mean(axis=(1, 3))
    return np.clip(img, 0.0, 1.0)


def generate_phantom(spec: PhantomSpec) -> Tensor:
    """Render the slice described by ``spec`` as a 1×1×size×size tensor."""
    ellipses = shepp_logan_ellipses() if spec.kind == "shepp_logan" else random_ellipses(spec)
    img = render_ellipses(spec.size, ellipses, spec.supersample)
    return Tensor(img[None, None])
