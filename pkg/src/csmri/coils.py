"""Multi-coil forward model, RSS combination, emulated single-coil
synthesis, and sensitivity estimation from the auto-calibration region.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import CropSpec, ImageVolume, KSpaceVolume, center_crop_array
from .fourier import fft2c_array, ifft2c_array
from .masking import SamplingMask, center_block

# relative support threshold for sensitivity normalization
SUPPORT_EPS_FRACTION = 1e-3


class CalibrationError(ValueError):
    """Not enough fully sampled center lines for calibration."""


@dataclass(frozen=True)
class SensitivitySet:
    """Per-coil complex sensitivity maps, shape (coils, H, W).

    When normalized, sum_i |S_i|^2 == 1 on the support and 0 elsewhere.
    """

    maps: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        maps = np.asarray(self.maps)
        if maps.ndim != 3:
            raise ValueError("sensitivity maps must have shape (coils, H, W)")
        maps = np.ascontiguousarray(maps.astype(np.complex128))
        maps.setflags(write=False)
        object.__setattr__(self, "maps", maps)

    @property
    def coil_count(self) -> int:
        return self.maps.shape[0]


@dataclass(frozen=True)
class EscCoefficients:
    """Per-volume complex combination weights for emulated single-coil data."""

    alpha: np.ndarray
    rank_deficient: bool = False

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.complex128).copy()
        if alpha.ndim != 1:
            raise ValueError("alpha must be a vector")
        if not np.isfinite(alpha).all():
            raise ValueError("alpha must be finite")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)


def forward_multicoil(m: ImageVolume, s: SensitivitySet) -> KSpaceVolume:
    """y_i = F(S_i * m) per coil; image volume (slices, H, W)."""
    img = m.data
    if img.ndim != 3:
        raise ValueError("forward model expects (slices, H, W) image")
    if img.shape[-2:] != s.maps.shape[-2:]:
        raise ValueError("image and sensitivity spatial extents differ")
    coil_images = img[:, None, :, :] * s.maps[None, :, :, :]
    return KSpaceVolume(fft2c_array(coil_images))


def adjoint_multicoil(y: KSpaceVolume, s: SensitivitySet) -> ImageVolume:
    """sum_i conj(S_i) * F^-1(y_i); adjoint of forward_multicoil."""
    if y.coil_count != s.coil_count:
        raise ValueError("coil counts differ")
    coil_images = ifft2c_array(y.data)
    combined = np.sum(np.conj(s.maps)[None] * coil_images, axis=1)
    return ImageVolume(combined, is_magnitude=False)


def rss_combine(coil_images: ImageVolume) -> ImageVolume:
    """Root-sum-of-squares over the coil axis; real non-negative output."""
    if not coil_images.has_coil_axis:
        raise ValueError("rss_combine expects a coil axis")
    rss = np.sqrt(np.sum(np.abs(coil_images.data) ** 2, axis=1))
    return ImageVolume(rss, is_magnitude=True)


def rss_reconstruction(y: KSpaceVolume, c: CropSpec) -> ImageVolume:
    """Per-coil inverse transform, RSS combination, then central crop.

    With fully sampled data this is the multi-coil ground truth; with
    zero-filled data it is the multi-coil baseline input.
    """
    coil_images = ifft2c_array(y.data)
    rss = np.sqrt(np.sum(np.abs(coil_images) ** 2, axis=1))
    return ImageVolume(
        center_crop_array(rss, c.out_height, c.out_width), is_magnitude=True
    )


def fit_esc(
    coil_images: ImageVolume,
    target_rss: ImageVolume,
    ridge_scale: float = 1e-9,
) -> EscCoefficients:
    """Least-squares fit of complex weights alpha so that
    sum_i alpha_i * coil_i approximates the RSS target over all slices.

    Solved by ridge-stabilized normal equations; the tiny ridge picks the
    minimum-norm solution when coils are linearly dependent.
    """
    if not coil_images.has_coil_axis:
        raise ValueError("fit_esc expects per-coil images")
    if target_rss.data.shape != (
        coil_images.data.shape[0],
        *coil_images.data.shape[2:],
    ):
        raise ValueError("target shape does not match coil images")
    n_c = coil_images.data.shape[1]
    # (coils, samples) design matrix over all slices jointly
    a = np.moveaxis(coil_images.data, 1, 0).reshape(n_c, -1)
    b = np.asarray(target_rss.data, dtype=np.float64).ravel()

    gram = a @ a.conj().T
    rhs = a @ b
    ridge = ridge_scale * np.trace(gram).real / n_c
    rank_deficient = False
    eigvals = np.linalg.eigvalsh(gram)
    if eigvals[0] <= 0 or eigvals[-1] / max(eigvals[0], 1e-300) > 1e12:
        rank_deficient = True
        warnings.warn("ESC Gram matrix is rank deficient; ridge solution returned")
    alpha = np.linalg.solve(gram + ridge * np.eye(n_c), rhs)
    return EscCoefficients(np.conj(alpha), rank_deficient=rank_deficient)


def esc_combine_images(coil_images: ImageVolume, alpha: EscCoefficients) -> np.ndarray:
    return np.tensordot(alpha.alpha, np.moveaxis(coil_images.data, 1, 0), axes=1)


def esc_kspace(coil_kspace: KSpaceVolume, alpha: EscCoefficients) -> KSpaceVolume:
    """Emulated single-coil k-space: sum_i alpha_i * y_i (coil axis kept,
    extent 1)."""
    if coil_kspace.coil_count != alpha.alpha.shape[0]:
        raise ValueError("coil counts differ")
    combined = np.tensordot(alpha.alpha, np.moveaxis(coil_kspace.data, 1, 0), axes=1)
    return KSpaceVolume(
        combined[:, None, :, :], acquisition_label=coil_kspace.acquisition_label
    )


def estimate_sensitivities(
    y: KSpaceVolume,
    m: SamplingMask,
    smoothing_width: int = 0,
    slice_index: int = 0,
) -> SensitivitySet:
    """Low-pass calibration: inverse transform of the fully sampled center
    columns, divided by its RSS on the support.

    Air pixels (pre-normalization RSS <= eps) get zero sensitivity so the
    normalization invariant holds exactly without dividing by noise.
    """
    if m.num_low_frequency < 4:
        raise CalibrationError(
            f"need >= 4 calibration lines, mask has {m.num_low_frequency}"
        )
    if y.data.shape[-1] != m.width:
        raise ValueError("mask length does not match k-space width")
    center = np.zeros(m.width, dtype=bool)
    center[center_block(m.width, m.num_low_frequency)] = True
    center &= np.asarray(m.keep)

    low_k = y.data[slice_index] * center
    low_images = ifft2c_array(low_k)
    rss = np.sqrt(np.sum(np.abs(low_images) ** 2, axis=0))
    peak = rss.max()
    if peak == 0.0:
        return SensitivitySet(np.zeros_like(low_images), normalized=True)
    support = rss > SUPPORT_EPS_FRACTION * peak
    maps = np.where(support[None], low_images / np.where(support, rss, 1.0)[None], 0.0)
    return SensitivitySet(maps, normalized=True)
