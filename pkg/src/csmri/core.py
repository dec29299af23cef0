"""Shared volume data model: k-space and image volumes, cropping, validation.

Axis order is (slice, coil, height, width) for k-space and
(slice, [coil,] height, width) for images.  Single-coil data keeps an
explicit coil axis of extent 1 so every code path is shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACQUISITION_LABELS = (
    "PD",
    "PDFS",
    "AXT1",
    "AXT1POST",
    "AXT2",
    "AXFLAIR",
    "SYNTHETIC",
)


class DimensionError(ValueError):
    """Raised when a spatial extent is too small for the requested operation."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class CropSpec:
    """Central crop window, e.g. 320x320 for knee reconstructions."""

    out_height: int
    out_width: int

    def __post_init__(self):
        if self.out_height < 1 or self.out_width < 1:
            raise ValueError("crop extents must be positive")


@dataclass(frozen=True)
class KSpaceVolume:
    """Complex frequency-domain measurements, shape (slices, coils, H, W)."""

    data: np.ndarray
    acquisition_label: str = "SYNTHETIC"

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 4:
            raise ValueError(
                f"k-space volume must be 4-D (slices, coils, H, W), got shape {arr.shape}"
            )
        if not np.iscomplexobj(arr):
            arr = arr.astype(np.complex128)
        if self.acquisition_label not in ACQUISITION_LABELS:
            raise ValueError(f"unknown acquisition label {self.acquisition_label!r}")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def coil_count(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple:
        return self.data.shape


@dataclass(frozen=True)
class ImageVolume:
    """Spatial-domain data, shape (slices, [coils,] H, W).

    Magnitude volumes are real and non-negative; complex volumes keep phase.
    """

    data: np.ndarray
    is_magnitude: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim not in (3, 4):
            raise ValueError(
                f"image volume must be 3-D or 4-D, got shape {arr.shape}"
            )
        if self.is_magnitude:
            if np.iscomplexobj(arr):
                raise ValueError("magnitude volume must be real")
            arr = arr.astype(np.float64) if arr.dtype != np.float64 else arr
            if arr.size and np.nanmin(arr) < 0:
                raise ValueError("magnitude volume must be non-negative")
        elif not np.iscomplexobj(arr):
            arr = arr.astype(np.complex128)
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def has_coil_axis(self) -> bool:
        return self.data.ndim == 4

    @property
    def shape(self) -> tuple:
        return self.data.shape


def crop_window(extent: int, out: int) -> slice:
    """Centered window; when (extent - out) is odd the extra retained pixel
    sits on the low-index side."""
    if out > extent:
        raise DimensionError(f"cannot crop extent {extent} to {out}")
    start = (extent - out) // 2
    return slice(start, start + out)


def center_crop_array(arr: np.ndarray, out_height: int, out_width: int) -> np.ndarray:
    rows = crop_window(arr.shape[-2], out_height)
    cols = crop_window(arr.shape[-1], out_width)
    return arr[..., rows, cols]


def center_crop(v: ImageVolume, c: CropSpec) -> ImageVolume:
    """Crop the central (out_height, out_width) spatial window of a volume."""
    return ImageVolume(
        center_crop_array(v.data, c.out_height, c.out_width),
        is_magnitude=v.is_magnitude,
    )


def validate_volume(v: KSpaceVolume) -> list:
    """Diagnostic invariant check; returns a list of violation messages."""
    violations = []
    data = v.data
    slices, coils, h, w = data.shape
    if coils < 1:
        violations.append("coil_count must be >= 1")
    if h < 2:
        violations.append(f"H >= 2 required, got H={h}")
    if w < 2:
        violations.append(f"W >= 2 required, got W={w}")
    finite = np.isfinite(data.real) & np.isfinite(data.imag)
    if not finite.all():
        for flat_index in np.flatnonzero(~finite.ravel()):
            violations.append(f"non-finite sample at flat index {flat_index}")
    return violations
