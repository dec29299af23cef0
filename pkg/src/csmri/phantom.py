"""Synthetic ground truth: ellipse phantoms, smooth coil sensitivities,
and noisy multi-coil k-space acquisition.

The ellipse geometry exercises both sharp edges (TV-friendly) and
smooth interiors (wavelet-friendly) without any licensed data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coils import SensitivitySet, forward_multicoil
from .core import ImageVolume, KSpaceVolume

# semi-axes in [-1, 1] field-of-view coordinates
DEFAULT_ELLIPSES = [
    (0.0, 0.0, 0.72, 0.92, 0.0, 1.0),
    (0.0, -0.02, 0.66, 0.87, 0.0, -0.6),
    (0.22, 0.0, 0.11, 0.31, -0.31, -0.2),
    (-0.22, 0.0, 0.16, 0.41, 0.31, -0.2),
    (0.0, 0.35, 0.21, 0.25, 0.0, 0.3),
    (0.0, 0.1, 0.046, 0.046, 0.0, 0.3),
    (-0.08, -0.605, 0.046, 0.023, 0.0, 0.2),
    (0.06, -0.605, 0.046, 0.046, 0.0, 0.2),
]


@dataclass(frozen=True)
class PhantomSpec:
    """Ellipse list: (cx, cy, semi_x, semi_y, rotation_rad, intensity)."""

    height: int
    width: int
    ellipses: tuple = tuple(DEFAULT_ELLIPSES)
    num_slices: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "ellipses", tuple(tuple(e) for e in self.ellipses)
        )


@dataclass(frozen=True)
class AcquisitionSpec:
    n_c: int = 4
    noise_sigma: float = 0.0
    sensitivity_seed: int = 0

    def __post_init__(self):
        if self.n_c < 1:
            raise ValueError("coil count must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be >= 0")


def _ellipse_mask(h, w, cx, cy, sx, sy, theta):
    ys = np.linspace(-1.0, 1.0, h)[:, None]
    xs = np.linspace(-1.0, 1.0, w)[None, :]
    x = xs - cx
    y = ys - cy
    ct, st = np.cos(theta), np.sin(theta)
    xr = ct * x + st * y
    yr = -st * x + ct * y
    return (xr / sx) ** 2 + (yr / sy) ** 2 <= 1.0


def make_phantom(spec: PhantomSpec) -> ImageVolume:
    """Deterministic non-negative ellipse phantom.

    Slices beyond the first are scaled copies so a multi-slice volume
    still has a single set of edges to reconstruct.
    """
    rng = np.random.default_rng(spec.seed)
    base = np.zeros((spec.height, spec.width))
    for cx, cy, sx, sy, theta, intensity in spec.ellipses:
        base += intensity * _ellipse_mask(spec.height, spec.width, cx, cy, sx, sy, theta)
    base = np.clip(base, 0.0, None)
    scales = 0.75 + 0.5 * rng.random(spec.num_slices)
    scales[0] = 1.0
    vol = base[None] * scales[:, None, None]
    return ImageVolume(vol, is_magnitude=True)


def make_sensitivities(height: int, width: int, n_c: int, seed: int = 0) -> SensitivitySet:
    """Smooth complex Gaussian-bump coil profiles at equally spaced angles
    around the field of view, normalized so sum_i |S_i|^2 == 1 everywhere."""
    if n_c < 1:
        raise ValueError("coil count must be >= 1")
    rng = np.random.default_rng(seed)
    ys = np.linspace(-1.0, 1.0, height)[:, None]
    xs = np.linspace(-1.0, 1.0, width)[None, :]
    sigma = 1.2
    maps = np.empty((n_c, height, width), dtype=np.complex128)
    for i in range(n_c):
        angle = 2.0 * np.pi * i / n_c
        cx, cy = 0.9 * np.cos(angle), 0.9 * np.sin(angle)
        mag = np.exp(-(((xs - cx) ** 2 + (ys - cy) ** 2)) / (2.0 * sigma**2))
        # gentle linear phase ramp, distinct per coil
        ramp = rng.uniform(-0.5, 0.5, size=2)
        phase = np.pi * (ramp[0] * xs + ramp[1] * ys)
        maps[i] = mag * np.exp(1j * phase)
    rss = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    maps /= rss[None]
    return SensitivitySet(maps, normalized=True)


def acquire(
    m: ImageVolume,
    s: SensitivitySet,
    a: AcquisitionSpec,
    seed: int = 0,
) -> KSpaceVolume:
    """Noisy multi-coil measurement: forward model plus i.i.d. circular
    complex Gaussian k-space noise with std sigma per component."""
    if s.coil_count != a.n_c:
        raise ValueError("sensitivity set does not match acquisition coil count")
    clean = forward_multicoil(m, s)
    if a.noise_sigma == 0.0:
        return clean
    rng = np.random.default_rng(seed)
    shape = clean.data.shape
    noise = a.noise_sigma * (
        rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    )
    return KSpaceVolume(clean.data + noise)


def simulate_volume(
    phantom_spec: PhantomSpec,
    acq: AcquisitionSpec,
    noise_seed: int = 0,
) -> tuple:
    """Convenience pipeline: phantom -> sensitivities -> noisy k-space.

    Returns (image, sensitivities, kspace)."""
    img = make_phantom(phantom_spec)
    sens = make_sensitivities(
        phantom_spec.height, phantom_spec.width, acq.n_c, acq.sensitivity_seed
    )
    y = acquire(img, sens, acq, seed=noise_seed)
    return img, sens, y
