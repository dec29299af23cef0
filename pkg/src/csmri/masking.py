"""Cartesian undersampling masks (random and equispaced) and the k-space
projection operator.

A mask is a 1-D keep vector over the k-space width.  A fully sampled
block of adjacent low-frequency columns is always kept: 8% of columns at
4x acceleration, 4% at 8x.  The block is centered on column W // 2, the
same convention the centered FFT uses for the zero-frequency coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import KSpaceVolume

CANONICAL_POLICIES = {4: 0.08, 8: 0.04}


class InfeasiblePolicyError(ValueError):
    """Mask policy cannot be satisfied at the given width."""


@dataclass(frozen=True)
class MaskPolicy:
    acceleration: int
    center_fraction: float
    kind: str = "random"  # "random" or "equispaced"

    def __post_init__(self):
        if self.acceleration < 1:
            raise ValueError("acceleration must be >= 1")
        if not 0 < self.center_fraction < 1:
            raise ValueError("center_fraction must be in (0, 1)")
        if self.kind not in ("random", "equispaced"):
            raise ValueError(f"unknown mask kind {self.kind!r}")

    @classmethod
    def canonical(cls, acceleration: int, kind: str = "random") -> "MaskPolicy":
        return cls(acceleration, CANONICAL_POLICIES[acceleration], kind)


@dataclass(frozen=True)
class SamplingMask:
    keep: np.ndarray
    acceleration_nominal: int
    center_fraction: float
    kind: str
    seed: int
    num_low_frequency: int

    def __post_init__(self):
        keep = np.asarray(self.keep, dtype=bool).copy()
        if keep.ndim != 1:
            raise ValueError("keep vector must be 1-D")
        if not keep.any():
            raise ValueError("mask must keep at least one column")
        keep.setflags(write=False)
        object.__setattr__(self, "keep", keep)

    @property
    def width(self) -> int:
        return self.keep.shape[0]

    def center_columns(self) -> slice:
        return center_block(self.width, self.num_low_frequency)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def center_block(width: int, num_low: int) -> slice:
    """Contiguous low-frequency block centered on column width // 2."""
    start = (width - num_low + 1) // 2
    return slice(start, start + num_low)


def _check_feasible(width: int, policy: MaskPolicy) -> int:
    num_low = round_half_up(policy.center_fraction * width)
    if num_low < 1:
        num_low = 1
    if width / policy.acceleration < num_low:
        raise InfeasiblePolicyError(
            f"W={width} at R={policy.acceleration} cannot accommodate "
            f"{num_low} fully sampled center columns"
        )
    return num_low


def make_random_mask(width: int, policy: MaskPolicy, seed: int) -> SamplingMask:
    """Keep the center block plus each remaining column independently with
    probability chosen so the expected kept count equals width / R.

    Columns are visited in ascending index order with numpy's seeded
    PCG64 generator, so masks regenerate bit-identically.
    """
    num_low = _check_feasible(width, policy)
    target = width / policy.acceleration
    denom = width - num_low
    prob = 0.0 if denom <= 0 else (target - num_low) / denom
    prob = min(max(prob, 0.0), 1.0)

    rng = np.random.default_rng(seed)
    keep = rng.random(width) < prob
    keep[center_block(width, num_low)] = True
    return SamplingMask(
        keep,
        acceleration_nominal=policy.acceleration,
        center_fraction=policy.center_fraction,
        kind="random",
        seed=seed,
        num_low_frequency=num_low,
    )


def make_equispaced_mask(width: int, policy: MaskPolicy, seed: int) -> SamplingMask:
    """Keep columns offset, offset+R, offset+2R, ... for a seed-derived
    offset uniform in {0..R-1}, unioned with the center block."""
    num_low = _check_feasible(width, policy)
    accel = policy.acceleration
    rng = np.random.default_rng(seed)
    offset = int(rng.integers(accel))

    keep = np.zeros(width, dtype=bool)
    keep[offset::accel] = True
    keep[center_block(width, num_low)] = True
    return SamplingMask(
        keep,
        acceleration_nominal=accel,
        center_fraction=policy.center_fraction,
        kind="equispaced",
        seed=seed,
        num_low_frequency=num_low,
    )


def make_mask(width: int, policy: MaskPolicy, seed: int) -> SamplingMask:
    if policy.kind == "equispaced":
        return make_equispaced_mask(width, policy, seed)
    return make_random_mask(width, policy, seed)


def apply_mask_array(k: np.ndarray, mask: SamplingMask) -> np.ndarray:
    if k.shape[-1] != mask.width:
        raise ValueError(
            f"mask length {mask.width} != k-space width {k.shape[-1]}"
        )
    return k * mask.keep


def apply_mask(k: KSpaceVolume, mask: SamplingMask) -> KSpaceVolume:
    """Zero out unsampled k-space columns in every slice and coil."""
    return KSpaceVolume(
        apply_mask_array(k.data, mask), acquisition_label=k.acquisition_label
    )


def achieved_acceleration(mask: SamplingMask) -> float:
    """Width divided by the number of kept columns."""
    return mask.width / int(mask.keep.sum())
