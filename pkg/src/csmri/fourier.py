"""Centered, unitary 2-D Fourier transforms over (slice, coil) planes.

Data is kept in "centered" form: low frequencies in the middle of the
array.  The zero-frequency coefficient sits at (H // 2, W // 2).  Both
directions scale by 1/sqrt(H*W) so the transform is an isometry.
"""

from __future__ import annotations

import numpy as np

from .core import ImageVolume, KSpaceVolume


def fft2c_array(x: np.ndarray) -> np.ndarray:
    """Centered unitary 2-D FFT over the last two axes."""
    axes = (-2, -1)
    return np.fft.fftshift(
        np.fft.fft2(np.fft.ifftshift(x, axes=axes), axes=axes, norm="ortho"),
        axes=axes,
    )


def ifft2c_array(k: np.ndarray) -> np.ndarray:
    """Centered unitary 2-D inverse FFT over the last two axes."""
    axes = (-2, -1)
    return np.fft.fftshift(
        np.fft.ifft2(np.fft.ifftshift(k, axes=axes), axes=axes, norm="ortho"),
        axes=axes,
    )


def fft2c(img: ImageVolume, acquisition_label: str = "SYNTHETIC") -> KSpaceVolume:
    """Transform a coil image volume (slices, coils, H, W) to k-space."""
    if not img.has_coil_axis:
        raise ValueError("fft2c expects a volume with a coil axis")
    return KSpaceVolume(fft2c_array(img.data), acquisition_label=acquisition_label)


def ifft2c(k: KSpaceVolume) -> ImageVolume:
    """Transform k-space back to per-coil images."""
    return ImageVolume(ifft2c_array(k.data), is_magnitude=False)


def fftshift_axes(t: np.ndarray, axis_bitmask: int) -> np.ndarray:
    """Rotate each axis selected by the bitmask (bit k selects axis k).

    Index i of a selected axis of extent n maps to input index
    (i + n // 2) % n; applying twice on even extents is the identity.
    """
    if axis_bitmask < 0:
        raise ValueError("bitmask must be non-negative")
    if axis_bitmask >= (1 << t.ndim):
        raise ValueError(
            f"bitmask {axis_bitmask} selects axes beyond rank {t.ndim}"
        )
    out = t
    for axis in range(t.ndim):
        if axis_bitmask & (1 << axis):
            out = np.roll(out, -(t.shape[axis] // 2), axis=axis)
    return out
