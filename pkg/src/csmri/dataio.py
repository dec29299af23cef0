"""File formats: the HDF5 volume container, the CFL/HDR complex-float
pair, and train/val/test split manifests.

Container layout (one file per volume):
  datasets   kspace, reconstruction_rss, reconstruction_esc, mask
  attributes acquisition, patient_id, norm, max, acceleration,
             num_low_frequency

Complex data is stored as pairs of little-endian 32-bit floats
(real, imaginary); the encoding is declared in the file attribute
``complex_encoding``.  Single-coil k-space drops the coil axis on disk
and regains an extent-1 coil axis in memory.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import h5py
import numpy as np

from .core import ImageVolume, KSpaceVolume
from .masking import CANONICAL_POLICIES, SamplingMask

COMPLEX_ENCODING = "float32 pairs (real, imaginary)"
SPLITS = ("train", "validation", "test")


class ContainerFormatError(ValueError):
    """Malformed volume container."""


class CflFormatError(ValueError):
    """Header/data mismatch in a CFL/HDR pair."""


@dataclass
class VolumeRecord:
    kspace: KSpaceVolume
    reconstruction_rss: ImageVolume | None = None
    reconstruction_esc: ImageVolume | None = None
    mask: SamplingMask | None = None
    acquisition: str = "SYNTHETIC"
    patient_id: str = ""
    norm: float | None = None
    max_value: float | None = None
    acceleration: int | None = None
    num_low_frequency: int | None = None

    @property
    def is_test_style(self) -> bool:
        return self.reconstruction_rss is None and self.reconstruction_esc is None

    def target(self) -> ImageVolume | None:
        return (
            self.reconstruction_rss
            if self.reconstruction_rss is not None
            else self.reconstruction_esc
        )

    def validate(self) -> list:
        violations = []
        if self.is_test_style:
            if self.mask is None:
                violations.append("test-style record requires a mask")
            if self.acceleration is None or self.num_low_frequency is None:
                violations.append(
                    "test-style record requires acceleration and num_low_frequency"
                )
            if self.norm is not None or self.max_value is not None:
                violations.append(
                    "norm/max are only available with ground truths"
                )
        else:
            target = self.target()
            if self.norm is None or self.max_value is None:
                violations.append("train/val record requires norm and max")
            else:
                actual_norm = float(np.linalg.norm(target.data))
                if abs(actual_norm - self.norm) > 1e-6 * max(actual_norm, 1e-30):
                    violations.append(
                        f"norm attribute {self.norm} != target norm {actual_norm}"
                    )
                actual_max = float(target.data.max())
                if abs(actual_max - self.max_value) > 1e-6 * max(abs(actual_max), 1e-30):
                    violations.append(
                        f"max attribute {self.max_value} != target max {actual_max}"
                    )
        return violations


def make_train_record(
    kspace: KSpaceVolume,
    reconstruction_rss: ImageVolume | None = None,
    reconstruction_esc: ImageVolume | None = None,
    acquisition: str = "SYNTHETIC",
    patient_id: str = "",
) -> VolumeRecord:
    """Build a train/val-style record with norm/max computed from the target."""
    record = VolumeRecord(
        kspace=kspace,
        reconstruction_rss=reconstruction_rss,
        reconstruction_esc=reconstruction_esc,
        acquisition=acquisition,
        patient_id=patient_id,
    )
    target = record.target()
    if target is None:
        raise ValueError("train/val record needs a ground truth")
    record.norm = float(np.linalg.norm(target.data))
    record.max_value = float(target.data.max())
    return record


def write_volume(record: VolumeRecord, path) -> None:
    violations = record.validate()
    if violations:
        raise ContainerFormatError(f"{path}: " + "; ".join(violations))
    path = Path(path)
    try:
        with h5py.File(path, "w") as f:
            f.attrs["complex_encoding"] = COMPLEX_ENCODING
            k = record.kspace.data.astype(np.complex64)
            if record.kspace.coil_count == 1:
                k = k[:, 0]
            f.create_dataset("kspace", data=k)
            if record.reconstruction_rss is not None:
                f.create_dataset(
                    "reconstruction_rss",
                    data=record.reconstruction_rss.data.astype(np.float32),
                )
            if record.reconstruction_esc is not None:
                f.create_dataset(
                    "reconstruction_esc",
                    data=record.reconstruction_esc.data.astype(np.float32),
                )
            if record.mask is not None:
                f.create_dataset(
                    "mask", data=np.asarray(record.mask.keep, dtype=np.float32)
                )
                f["mask"].attrs["kind"] = record.mask.kind
                f["mask"].attrs["seed"] = record.mask.seed
                f["mask"].attrs["center_fraction"] = record.mask.center_fraction
            f.attrs["acquisition"] = record.acquisition
            f.attrs["patient_id"] = record.patient_id
            if record.norm is not None:
                f.attrs["norm"] = record.norm
                f.attrs["max"] = record.max_value
            if record.acceleration is not None:
                f.attrs["acceleration"] = record.acceleration
            if record.num_low_frequency is not None:
                f.attrs["num_low_frequency"] = record.num_low_frequency
    except OSError as exc:
        raise ContainerFormatError(f"{path}: {exc}") from exc


def read_volume(path) -> VolumeRecord:
    path = Path(path)
    try:
        with h5py.File(path, "r") as f:
            if "kspace" not in f:
                raise ContainerFormatError(f"{path}: missing dataset 'kspace'")
            k = np.asarray(f["kspace"])
            if k.ndim == 3:  # single coil on disk
                k = k[:, None]
            elif k.ndim != 4:
                raise ContainerFormatError(
                    f"{path}: kspace must be 3-D or 4-D, got shape {k.shape}"
                )
            acquisition = str(f.attrs.get("acquisition", "SYNTHETIC"))
            kspace = KSpaceVolume(k, acquisition_label=acquisition)

            def _image(name):
                if name not in f:
                    return None
                return ImageVolume(np.asarray(f[name], dtype=np.float64), is_magnitude=True)

            mask = None
            acceleration = f.attrs.get("acceleration")
            num_low = f.attrs.get("num_low_frequency")
            if "mask" in f:
                ds = f["mask"]
                keep = np.asarray(ds) > 0.5
                kind = str(ds.attrs.get("kind", "random"))
                seed = int(ds.attrs.get("seed", 0))
                frac = float(
                    ds.attrs.get(
                        "center_fraction",
                        CANONICAL_POLICIES.get(int(acceleration or 4), 0.08),
                    )
                )
                mask = SamplingMask(
                    keep,
                    acceleration_nominal=int(acceleration or 0) or 4,
                    center_fraction=frac,
                    kind=kind,
                    seed=seed,
                    num_low_frequency=int(num_low) if num_low is not None else int(keep.sum()),
                )

            record = VolumeRecord(
                kspace=kspace,
                reconstruction_rss=_image("reconstruction_rss"),
                reconstruction_esc=_image("reconstruction_esc"),
                mask=mask,
                acquisition=acquisition,
                patient_id=str(f.attrs.get("patient_id", "")),
                norm=float(f.attrs["norm"]) if "norm" in f.attrs else None,
                max_value=float(f.attrs["max"]) if "max" in f.attrs else None,
                acceleration=int(acceleration) if acceleration is not None else None,
                num_low_frequency=int(num_low) if num_low is not None else None,
            )
    except OSError as exc:
        raise ContainerFormatError(f"{path}: {exc}") from exc
    return record


def write_reconstruction(volume: ImageVolume, path) -> None:
    """Write an externally produced magnitude volume for scoring."""
    with h5py.File(Path(path), "w") as f:
        f.create_dataset("reconstruction", data=volume.data.astype(np.float32))


def read_reconstruction(path) -> ImageVolume:
    with h5py.File(Path(path), "r") as f:
        if "reconstruction" not in f:
            raise ContainerFormatError(f"{path}: missing dataset 'reconstruction'")
        return ImageVolume(np.asarray(f["reconstruction"], dtype=np.float64), is_magnitude=True)


# ---------------------------------------------------------------- CFL/HDR


def write_cfl(tensor: np.ndarray, basepath) -> None:
    """Write a complex tensor as a .hdr/.cfl pair.

    The header holds the extents on one line; the data file holds
    interleaved little-endian float32 (real, imaginary) pairs in
    column-major order.
    """
    basepath = Path(basepath)
    tensor = np.asarray(tensor)
    dims = " ".join(str(d) for d in tensor.shape)
    basepath.with_suffix(".hdr").write_text(dims + "\n")
    flat = np.ravel(tensor, order="F").astype(np.complex64)
    interleaved = np.empty(2 * flat.size, dtype="<f4")
    interleaved[0::2] = flat.real
    interleaved[1::2] = flat.imag
    basepath.with_suffix(".cfl").write_bytes(interleaved.tobytes())


def read_cfl(basepath) -> np.ndarray:
    basepath = Path(basepath)
    header = basepath.with_suffix(".hdr").read_text().strip().splitlines()
    dims = tuple(int(tok) for tok in header[0].split())
    raw = np.frombuffer(basepath.with_suffix(".cfl").read_bytes(), dtype="<f4")
    expected = 2 * int(np.prod(dims))
    if raw.size != expected:
        raise CflFormatError(
            f"{basepath}: header implies {expected} floats, data file has {raw.size}"
        )
    flat = raw[0::2] + 1j * raw[1::2]
    return flat.astype(np.complex64).reshape(dims, order="F")


# ------------------------------------------------------------- manifests


@dataclass
class SplitEntry:
    split: str
    mask_kind: str
    acceleration: int
    center_fraction: float
    seed: int


@dataclass
class SplitManifest:
    entries: dict  # volume_id -> SplitEntry

    def ids(self, split: str) -> list:
        return sorted(v for v, e in self.entries.items() if e.split == split)

    def save(self, path) -> None:
        lines = []
        for vid in sorted(self.entries):
            e = self.entries[vid]
            lines.append(
                f"{vid}\t{e.split}\t{e.mask_kind}\t{e.acceleration}"
                f"\t{e.center_fraction}\t{e.seed}"
            )
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "SplitManifest":
        entries = {}
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            vid, split, kind, accel, frac, seed = line.split("\t")
            entries[vid] = SplitEntry(split, kind, int(accel), float(frac), int(seed))
        return cls(entries)


def _largest_remainder_sizes(total: int, fractions) -> list:
    raw = [f * total for f in fractions]
    sizes = [int(np.floor(r)) for r in raw]
    remainder = total - sum(sizes)
    order = sorted(range(len(raw)), key=lambda i: raw[i] - sizes[i], reverse=True)
    for i in order[:remainder]:
        sizes[i] += 1
    return sizes


def stable_seed(*parts) -> int:
    """Deterministic 63-bit seed from arbitrary string/int parts."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def build_split(volume_ids, fractions, seed: int, mask_kind: str = "random") -> SplitManifest:
    """Random disjoint train/validation/test assignment with
    largest-remainder rounding; each entry gets a mask policy with the
    acceleration set randomly to 4 or 8 with equal probability."""
    ids = list(volume_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate volume ids")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    rng = np.random.default_rng(seed)
    order = list(rng.permutation(len(ids)))
    sizes = _largest_remainder_sizes(len(ids), fractions)
    entries = {}
    cursor = 0
    for split, size in zip(SPLITS, sizes):
        for idx in order[cursor : cursor + size]:
            vid = ids[idx]
            accel = int(rng.choice([4, 8]))
            entries[vid] = SplitEntry(
                split=split,
                mask_kind=mask_kind,
                acceleration=accel,
                center_fraction=CANONICAL_POLICIES[accel],
                seed=stable_seed(seed, vid),
            )
        cursor += size
    return SplitManifest(entries)
