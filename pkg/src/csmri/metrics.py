"""Volume-level image quality metrics: NMSE, PSNR, SSIM, L1.

All metrics compare real magnitude volumes that have already been
cropped to match the ground truth.  SSIM uses a uniform 7x7 window over
fully interior positions, k1=0.01, k2=0.03, and the per-volume maximum
of the target as the dynamic range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter

from .core import ImageVolume

SSIM_WINDOW = 7
SSIM_K1 = 0.01
SSIM_K2 = 0.03


class ZeroReferenceError(ValueError):
    """Reference volume is identically zero."""


@dataclass
class MetricsReport:
    volume_id: str
    nmse: float
    psnr_db: float
    ssim: float
    l1: float
    acquisition_label: str = "SYNTHETIC"
    acceleration: int | None = None
    track: str | None = None

    def as_dict(self) -> dict:
        return {
            "volume_id": self.volume_id,
            "nmse": self.nmse,
            "psnr_db": "inf" if math.isinf(self.psnr_db) else self.psnr_db,
            "ssim": self.ssim,
            "l1": self.l1,
            "acquisition_label": self.acquisition_label,
            "acceleration": self.acceleration,
            "track": self.track,
        }


def _arrays(vhat, v):
    a = vhat.data if isinstance(vhat, ImageVolume) else np.asarray(vhat)
    b = v.data if isinstance(v, ImageVolume) else np.asarray(v)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)


def nmse(vhat, v) -> float:
    a, b = _arrays(vhat, v)
    denom = float(np.sum(b * b))
    if denom == 0.0:
        raise ZeroReferenceError("reference volume is all zero")
    return float(np.sum((a - b) ** 2)) / denom


def psnr(vhat, v) -> float:
    """Peak signal-to-noise ratio in dB; +inf when the volumes match."""
    a, b = _arrays(vhat, v)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    peak = float(b.max())
    return 10.0 * math.log10(peak * peak / mse)


def _windowed_means(plane: np.ndarray) -> np.ndarray:
    half = SSIM_WINDOW // 2
    filtered = uniform_filter(plane, size=SSIM_WINDOW, mode="constant")
    return filtered[half:-half, half:-half]


def ssim(vhat, v, dynamic_range: float | None = None) -> float:
    """Mean SSIM over all interior 7x7 windows of every slice."""
    a, b = _arrays(vhat, v)
    if a.ndim == 2:
        a, b = a[None], b[None]
    if a.shape[-1] < SSIM_WINDOW or a.shape[-2] < SSIM_WINDOW:
        raise ValueError(f"spatial extents must be >= {SSIM_WINDOW}")
    level = float(b.max()) if dynamic_range is None else float(dynamic_range)
    c1 = (SSIM_K1 * level) ** 2
    c2 = (SSIM_K2 * level) ** 2

    total = 0.0
    count = 0
    for xa, xb in zip(a, b):
        mu_a = _windowed_means(xa)
        mu_b = _windowed_means(xb)
        # population (1/49) second moments
        e_aa = _windowed_means(xa * xa)
        e_bb = _windowed_means(xb * xb)
        e_ab = _windowed_means(xa * xb)
        var_a = e_aa - mu_a * mu_a
        var_b = e_bb - mu_b * mu_b
        cov = e_ab - mu_a * mu_b
        score = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
            (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
        )
        total += float(score.sum())
        count += score.size
    return total / count


def l1_error(vhat, v) -> float:
    a, b = _arrays(vhat, v)
    return float(np.sum(np.abs(a - b)))


def evaluate_pair(
    volume_id: str,
    vhat: ImageVolume,
    v: ImageVolume,
    acquisition_label: str = "SYNTHETIC",
    acceleration: int | None = None,
    track: str | None = None,
) -> MetricsReport:
    return MetricsReport(
        volume_id=volume_id,
        nmse=nmse(vhat, v),
        psnr_db=psnr(vhat, v),
        ssim=ssim(vhat, v),
        l1=l1_error(vhat, v),
        acquisition_label=acquisition_label,
        acceleration=acceleration,
        track=track,
    )
