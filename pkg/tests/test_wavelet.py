import numpy as np
import pytest

from csmri.wavelet import (
    DEC_HI,
    DEC_LO,
    PyramidError,
    WaveletPyramid,
    dwt2_forward,
    dwt2_inverse,
    soft_threshold_pyramid,
)


def oracle_analysis_plane(x):
    """Loop-based one-level periodic analysis from the filter definition."""
    h, w = x.shape

    def step(v):  # 1-D along last axis
        n = v.shape[-1]
        lo = np.zeros(v.shape[:-1] + (n // 2,), dtype=v.dtype)
        hi = np.zeros_like(lo)
        for k in range(n // 2):
            for m in range(4):
                lo[..., k] += DEC_LO[m] * v[..., (2 * k + m) % n]
                hi[..., k] += DEC_HI[m] * v[..., (2 * k + m) % n]
        return lo, hi

    lo_r, hi_r = step(np.moveaxis(x, 0, -1))
    lo_r = np.moveaxis(lo_r, -1, 0)
    hi_r = np.moveaxis(hi_r, -1, 0)
    ll, lh = step(lo_r)
    hl, hh = step(hi_r)
    return ll, lh, hl, hh


def test_filters_are_orthonormal():
    assert abs(np.sum(DEC_LO**2) - 1) < 1e-14
    assert abs(np.sum(DEC_HI**2) - 1) < 1e-14
    assert abs(np.dot(DEC_LO, DEC_HI)) < 1e-14


def test_constant_plane_details_vanish():
    p = dwt2_forward(np.full((16, 16), 3.7), 2)
    for bands in p.details:
        for b in bands:
            assert np.abs(b).max() < 1e-12
    assert abs(p.energy() - 16 * 16 * 3.7**2) < 1e-9


def test_energy_preserved_random():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((32, 32))
    p = dwt2_forward(x, 3)
    assert abs(p.energy() - np.sum(x**2)) < 1e-10 * np.sum(x**2)


def test_one_level_matches_convolution_oracle():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((8, 8))
    p = dwt2_forward(x, 1)
    ll, lh, hl, hh = oracle_analysis_plane(x)
    np.testing.assert_allclose(p.ll, ll, atol=1e-12)
    np.testing.assert_allclose(p.details[0][0], lh, atol=1e-12)
    np.testing.assert_allclose(p.details[0][1], hl, atol=1e-12)
    np.testing.assert_allclose(p.details[0][2], hh, atol=1e-12)


def test_perfect_reconstruction_non_dyadic():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((64, 48))
    p = dwt2_forward(x, 3)
    back = dwt2_inverse(p)
    assert np.abs(back - x).max() < 1e-10


def test_perfect_reconstruction_sweep():
    rng = np.random.default_rng(3)
    for size in (8, 17, 33, 100, 128):
        for levels in (1, 2, 4):
            x = rng.standard_normal((size, size))
            back = dwt2_inverse(dwt2_forward(x, levels))
            assert np.abs(back - x).max() < 1e-10, (size, levels)


def test_zero_pyramid_inverts_to_zero():
    p = dwt2_forward(np.zeros((16, 16)), 2)
    assert np.abs(dwt2_inverse(p)).max() == 0


def test_single_ll_coefficient_round_trip():
    p = dwt2_forward(np.zeros((16, 16)), 2)
    ll = np.zeros_like(p.ll)
    ll[1, 2] = 1.0
    atom_pyramid = WaveletPyramid(p.levels, p.details, ll, p.pad_record)
    atom = dwt2_inverse(atom_pyramid)
    reanalyzed = dwt2_forward(atom, 2)
    assert abs(reanalyzed.ll[1, 2] - 1.0) < 1e-10
    reanalyzed.ll[1, 2] = 0.0
    assert np.abs(reanalyzed.ll).max() < 1e-10
    for bands in reanalyzed.details:
        for b in bands:
            assert np.abs(b).max() < 1e-10


def test_coefficient_count_critically_sampled():
    p = dwt2_forward(np.zeros((20, 36)), 2)
    # padded up to multiples of 4
    assert p.coefficient_count() == 20 * 36


def test_orthonormality_inner_products():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((32, 32))
    y = rng.standard_normal((32, 32))
    px = dwt2_forward(x, 3)
    py = dwt2_forward(y, 3)

    def flat(p):
        return np.concatenate(
            [p.ll.ravel()] + [b.ravel() for bands in p.details for b in bands]
        )

    assert abs(np.dot(flat(px), flat(py)) - np.sum(x * y)) < 1e-9 * abs(np.sum(x * y))


def test_ramp_interior_details_vanish():
    # two vanishing moments annihilate linear ramps away from the wrap
    ramp = np.outer(np.ones(32), np.arange(32, dtype=float))
    p = dwt2_forward(ramp, 1)
    lh, hl, hh = p.details[0]
    interior = slice(1, -1)
    assert np.abs(hl[interior, interior]).max() < 1e-10
    assert np.abs(hh[interior, interior]).max() < 1e-10


def test_soft_threshold_identity_at_zero():
    rng = np.random.default_rng(5)
    p = dwt2_forward(rng.standard_normal((16, 16)), 2)
    q = soft_threshold_pyramid(p, 0.0)
    for (b1, b2) in zip(
        [b for bands in p.details for b in bands],
        [b for bands in q.details for b in bands],
    ):
        np.testing.assert_array_equal(b1, b2)
    np.testing.assert_array_equal(p.ll, q.ll)


def test_soft_threshold_values():
    p = dwt2_forward(np.zeros((8, 8)), 1)
    lh = np.zeros_like(p.details[0][0])
    lh[0, 0] = 0.5
    lh[0, 1] = -0.1
    p = WaveletPyramid(p.levels, [(lh, p.details[0][1], p.details[0][2])], p.ll, p.pad_record)
    q = soft_threshold_pyramid(p, 0.2)
    assert abs(q.details[0][0][0, 0] - 0.3) < 1e-14
    assert q.details[0][0][0, 1] == 0.0


def test_soft_threshold_ll_untouched():
    rng = np.random.default_rng(6)
    p = dwt2_forward(rng.standard_normal((16, 16)), 2)
    q = soft_threshold_pyramid(p, 10.0)
    np.testing.assert_array_equal(p.ll, q.ll)
    for bands in q.details:
        for b in bands:
            assert np.abs(b).max() == 0


def test_soft_threshold_is_prox_1d_scan():
    t = 0.35
    for c in (-1.2, -0.2, 0.0, 0.4, 2.0):
        candidates = np.linspace(-3, 3, 6001)
        objective = t * np.abs(candidates) + 0.5 * (candidates - c) ** 2
        best = candidates[np.argmin(objective)]
        soft = np.sign(c) * max(abs(c) - t, 0.0)
        assert abs(best - soft) < 2e-3


def test_negative_threshold_rejected():
    p = dwt2_forward(np.zeros((8, 8)), 1)
    with pytest.raises(ValueError):
        soft_threshold_pyramid(p, -0.1)


def test_malformed_pyramid_rejected():
    p = dwt2_forward(np.zeros((16, 16)), 2)
    bad = WaveletPyramid(3, p.details, p.ll, p.pad_record)
    with pytest.raises(PyramidError):
        dwt2_inverse(bad)
