import numpy as np
import pytest

from csmri import dataio
from csmri.core import ImageVolume, KSpaceVolume
from csmri.dataio import (
    CflFormatError,
    ContainerFormatError,
    SplitManifest,
    VolumeRecord,
    build_split,
    make_train_record,
    read_cfl,
    read_reconstruction,
    read_volume,
    write_cfl,
    write_reconstruction,
    write_volume,
)
from csmri.masking import MaskPolicy, make_random_mask


def sample_record(rng, coils=3):
    k = (
        rng.standard_normal((2, coils, 16, 24)) + 1j * rng.standard_normal((2, coils, 16, 24))
    ).astype(np.complex64)
    gt = rng.random((2, 12, 12)).astype(np.float32).astype(np.float64)
    return make_train_record(
        KSpaceVolume(k, acquisition_label="PD"),
        reconstruction_rss=ImageVolume(gt, is_magnitude=True),
        acquisition="PD",
        patient_id="p01",
    )


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    record = sample_record(rng)
    path = tmp_path / "vol.h5"
    write_volume(record, path)
    back = read_volume(path)
    np.testing.assert_array_equal(
        back.kspace.data.astype(np.complex64), record.kspace.data.astype(np.complex64)
    )
    np.testing.assert_array_equal(
        back.reconstruction_rss.data.astype(np.float32),
        record.reconstruction_rss.data.astype(np.float32),
    )
    assert back.acquisition == "PD"
    assert back.patient_id == "p01"
    assert abs(back.norm - record.norm) < 1e-6 * record.norm


def test_single_coil_drops_axis_on_disk(tmp_path):
    import h5py

    rng = np.random.default_rng(1)
    record = sample_record(rng, coils=1)
    path = tmp_path / "sc.h5"
    write_volume(record, path)
    with h5py.File(path) as f:
        assert f["kspace"].ndim == 3
    back = read_volume(path)
    assert back.kspace.coil_count == 1
    assert back.kspace.data.ndim == 4


def test_test_style_with_ground_truth_rejected(tmp_path):
    rng = np.random.default_rng(2)
    record = sample_record(rng)
    record.acceleration = 4
    record.num_low_frequency = 29
    # ground truth present but no norm -> invariant violation
    record.norm = None
    record.max_value = None
    with pytest.raises(ContainerFormatError):
        write_volume(record, tmp_path / "bad.h5")


def test_norm_mismatch_rejected(tmp_path):
    rng = np.random.default_rng(3)
    record = sample_record(rng)
    record.norm = record.norm * 1.01
    with pytest.raises(ContainerFormatError, match="norm"):
        write_volume(record, tmp_path / "bad.h5")


def test_test_record_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    k = KSpaceVolume(
        (rng.standard_normal((1, 2, 8, 16)) + 0j).astype(np.complex64)
    )
    mask = make_random_mask(16, MaskPolicy(2, 0.3, "random"), 5)
    record = VolumeRecord(
        kspace=k,
        mask=mask,
        acceleration=2,
        num_low_frequency=mask.num_low_frequency,
    )
    path = tmp_path / "test.h5"
    write_volume(record, path)
    back = read_volume(path)
    assert back.is_test_style
    np.testing.assert_array_equal(back.mask.keep, mask.keep)
    assert back.acceleration == 2
    assert back.num_low_frequency == mask.num_low_frequency


def test_missing_kspace_reported(tmp_path):
    import h5py

    path = tmp_path / "empty.h5"
    with h5py.File(path, "w") as f:
        f.create_dataset("reconstruction_rss", data=np.zeros((1, 4, 4)))
    with pytest.raises(ContainerFormatError, match="kspace"):
        read_volume(path)


def test_truncated_file_errors(tmp_path):
    path = tmp_path / "trunc.h5"
    path.write_bytes(b"\x89HDF\r\n\x1a\nbroken")
    with pytest.raises(ContainerFormatError):
        read_volume(path)


def test_reconstruction_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    vol = ImageVolume(rng.random((2, 8, 8)).astype(np.float32).astype(float), is_magnitude=True)
    write_reconstruction(vol, tmp_path / "r.h5")
    back = read_reconstruction(tmp_path / "r.h5")
    np.testing.assert_array_equal(back.data, vol.data)


# ----------------------------------------------------------------- CFL


def test_cfl_header_line(tmp_path):
    t = np.zeros((1, 640, 368, 15), dtype=np.complex64)
    write_cfl(t, tmp_path / "input")
    assert (tmp_path / "input.hdr").read_text().strip() == "1 640 368 15"


def test_cfl_column_major_byte_order(tmp_path):
    t = np.array([[1 + 2j, 3 + 4j], [5 + 6j, 7 + 8j]], dtype=np.complex64)
    write_cfl(t, tmp_path / "two")
    raw = np.frombuffer((tmp_path / "two.cfl").read_bytes(), dtype="<f4")
    np.testing.assert_array_equal(raw, [1, 2, 5, 6, 3, 4, 7, 8])


def test_cfl_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(6)
    t = (rng.standard_normal((3, 5, 4)) + 1j * rng.standard_normal((3, 5, 4))).astype(
        np.complex64
    )
    write_cfl(t, tmp_path / "rt")
    back = read_cfl(tmp_path / "rt")
    np.testing.assert_array_equal(back, t)
    write_cfl(back, tmp_path / "rt2")
    assert (tmp_path / "rt.cfl").read_bytes() == (tmp_path / "rt2.cfl").read_bytes()


def test_cfl_independent_enumeration_oracle(tmp_path):
    rng = np.random.default_rng(7)
    t = (rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))).astype(np.complex64)
    write_cfl(t, tmp_path / "or")
    raw = np.frombuffer((tmp_path / "or.cfl").read_bytes(), dtype="<f4")
    pos = 0
    for j in range(3):  # column-major: first axis fastest
        for i in range(2):
            assert raw[pos] == np.float32(t[i, j].real)
            assert raw[pos + 1] == np.float32(t[i, j].imag)
            pos += 2


def test_cfl_size_mismatch(tmp_path):
    t = np.zeros((2, 2), dtype=np.complex64)
    write_cfl(t, tmp_path / "bad")
    (tmp_path / "bad.hdr").write_text("2 3\n")
    with pytest.raises(CflFormatError):
        read_cfl(tmp_path / "bad")


# ------------------------------------------------------------- splits


def test_split_all_train():
    manifest = build_split([f"v{i}" for i in range(10)], (1.0, 0.0, 0.0), seed=0)
    assert len(manifest.ids("train")) == 10


def test_split_largest_remainder_sizes():
    ids = [f"v{i}" for i in range(1000)]
    manifest = build_split(ids, (0.7, 0.15, 0.15), seed=1)
    assert len(manifest.ids("train")) == 700
    assert len(manifest.ids("validation")) == 150
    assert len(manifest.ids("test")) == 150


def test_split_deterministic_and_disjoint():
    ids = [f"v{i}" for i in range(57)]
    a = build_split(ids, (0.6, 0.2, 0.2), seed=9)
    b = build_split(ids, (0.6, 0.2, 0.2), seed=9)
    assert a.entries.keys() == b.entries.keys()
    for vid in ids:
        assert a.entries[vid] == b.entries[vid]
    all_ids = a.ids("train") + a.ids("validation") + a.ids("test")
    assert sorted(all_ids) == sorted(ids)


def test_split_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        build_split(["a", "a"], (1.0, 0.0, 0.0), seed=0)


def test_split_accelerations_roughly_balanced():
    ids = [f"v{i}" for i in range(400)]
    manifest = build_split(ids, (0.0, 0.0, 1.0), seed=2)
    accels = [e.acceleration for e in manifest.entries.values()]
    frac4 = accels.count(4) / len(accels)
    assert 0.4 < frac4 < 0.6
    for e in manifest.entries.values():
        assert e.center_fraction == (0.08 if e.acceleration == 4 else 0.04)


def test_manifest_save_load(tmp_path):
    ids = [f"v{i}" for i in range(12)]
    manifest = build_split(ids, (0.5, 0.25, 0.25), seed=3)
    path = tmp_path / "split.tsv"
    manifest.save(path)
    back = SplitManifest.load(path)
    assert back.entries == manifest.entries
