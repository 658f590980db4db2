import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fdnshash import fdns
from fdnshash.errors import (
    IncompatibleHashError,
    InvalidInputError,
    InvalidParameterError,
    OutOfBoundsError,
    UnsupportedParameterError,
)
from fdnshash.fdns import FdnsParams, HashVector

from oracles import dct2_direct, dns_direct, fgns_direct, pearson_direct

P53 = FdnsParams(canonical_w=64, canonical_h=64, search_window=5, neighborhood_window=3)


class TestParams:
    def test_defaults(self):
        p = FdnsParams()
        assert (p.canonical_w, p.canonical_h, p.gaussian_kernel, p.gaussian_sigma) == (256, 256, 3, 1.0)
        assert (p.search_window, p.neighborhood_window, p.margin) == (9, 3, 5)

    def test_fingerprint_is_pure(self):
        assert FdnsParams().fingerprint == FdnsParams().fingerprint
        assert FdnsParams(gaussian_sigma=1.5).fingerprint != FdnsParams().fingerprint
        assert FdnsParams(canonical_w=128).fingerprint != FdnsParams().fingerprint

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(search_window=8),
            dict(neighborhood_window=2),
            dict(search_window=5, neighborhood_window=5),
            dict(canonical_w=11),
            dict(gaussian_kernel=4),
            dict(gaussian_sigma=0.0),
            dict(search_window=1, neighborhood_window=1),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidParameterError):
            FdnsParams(**kwargs)


class TestDct2:
    def test_zero(self):
        np.testing.assert_array_equal(fdns.dct2(np.zeros((5, 3))), 0.0)

    def test_all_ones_2x2(self):
        np.testing.assert_allclose(fdns.dct2(np.ones((2, 2))), [[2, 0], [0, 0]], atol=1e-15)

    def test_identity_2x2(self):
        np.testing.assert_allclose(fdns.dct2(np.eye(2)), np.eye(2), atol=1e-15)

    def test_dc_is_scaled_mean(self):
        img = np.random.default_rng(0).uniform(0, 255, (7, 11))
        assert fdns.dct2(img)[0, 0] == pytest.approx(np.sqrt(77) * img.mean(), rel=1e-12)

    def test_random_8x8_matches_definition(self):
        img = np.random.default_rng(1).uniform(0, 255, (8, 8))
        np.testing.assert_allclose(fdns.dct2(img), dct2_direct(img), rtol=0, atol=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(1, 64), st.integers(1, 64), st.integers(0, 2**32 - 1))
    def test_energy_conserved(self, h, w, seed):
        img = np.random.default_rng(seed).uniform(0, 255, (h, w))
        c = fdns.dct2(img)
        assert np.sum(c * c) == pytest.approx(np.sum(img * img), rel=1e-6)


class TestDnsAt:
    def test_constant_matrix(self):
        np.testing.assert_array_equal(fdns.dns_at(np.full((12, 12), 3.5), (6, 6)), 0.0)

    def test_random_15x15_against_loop(self):
        c = np.random.default_rng(2).normal(0, 50, (15, 15))
        got = fdns.dns_at(c, (7, 7))
        np.testing.assert_allclose(got, dns_direct(c, (7, 7)), rtol=0, atol=1e-12)
        assert got[4, 4] == 0.0

    def test_offset_orientation(self):
        # a spike three rows below the centre sits outside the centre patch;
        # the window pixel at offset +3 has it in the middle of its own patch
        c = np.zeros((15, 15))
        c[10, 7] = 1.0
        d = fdns.dns_at(c, (7, 7))
        assert d[4, 4] == 0.0
        assert d[7, 4] == 1.0
        assert d[1, 4] == 0.0
        assert d[7, 3] == 1.0  # spike at the patch corner

    @pytest.mark.parametrize("center", [(4, 7), (7, 4), (10, 7), (7, 10), (0, 0)])
    def test_out_of_bounds(self, center):
        with pytest.raises(OutOfBoundsError):
            fdns.dns_at(np.zeros((15, 15)), center)

    def test_alternate_windows(self):
        c = np.random.default_rng(3).normal(size=(11, 11))
        np.testing.assert_allclose(fdns.dns_at(c, (5, 5), P53), dns_direct(c, (5, 5), 5, 3), atol=1e-12)


class TestFgns:
    def test_constant(self):
        np.testing.assert_array_equal(fdns.fgns(np.full((20, 20), 9.0)), 0.0)

    def test_single_center(self):
        c = np.random.default_rng(4).normal(size=(11, 11))
        np.testing.assert_allclose(fdns.fgns(c), fdns.dns_at(c, (5, 5)), atol=1e-12)

    def test_random_20x20_against_loop(self):
        c = np.random.default_rng(5).normal(0, 30, (20, 20))
        got = fdns.fgns(c)
        np.testing.assert_allclose(got, fgns_direct(c), rtol=0, atol=1e-9)
        assert got[4, 4] == 0.0
        assert np.all(got >= 0)

    def test_non_square(self):
        c = np.random.default_rng(6).normal(size=(13, 17))
        np.testing.assert_allclose(fdns.fgns(c), fgns_direct(c), atol=1e-9)

    def test_too_small(self):
        with pytest.raises(InvalidInputError):
            fdns.fgns(np.zeros((10, 20)))

    def test_permuted_order(self):
        c = np.random.default_rng(7).normal(size=(16, 16))
        order = np.random.default_rng(8).permutation(36)
        np.testing.assert_allclose(fdns.fgns(c), fgns_direct(c, order=order), atol=1e-9)

    def test_bit_stable(self):
        c = np.random.default_rng(9).normal(size=(40, 40))
        assert np.array_equal(fdns.fgns(c), fdns.fgns(c.copy()))


class TestExtractHash:
    def test_index_arithmetic(self):
        i, j = np.mgrid[0:9, 0:9]
        h = fdns.extract_hash(10.0 * i + j)
        expected = [10 * a + b for a in range(1, 9) for b in range(1, 9)]
        assert list(h.values) == expected
        assert h.values[0] == 11 and h.values[-1] == 88
        assert h.params_fingerprint == FdnsParams().fingerprint

    def test_zero_map(self):
        h = fdns.extract_hash(np.zeros((9, 9)))
        assert len(h) == 64 and not h.values.any()

    def test_needs_nine(self):
        with pytest.raises(UnsupportedParameterError):
            fdns.extract_hash(np.zeros((5, 5)), P53)

    def test_wrong_map_shape(self):
        with pytest.raises(InvalidInputError):
            fdns.extract_hash(np.zeros((7, 7)))


class TestHashImage:
    def test_deterministic(self):
        img = np.random.default_rng(10).uniform(0, 255, (120, 90, 3))
        a, b = fdns.hash_image(img), fdns.hash_image(img.copy())
        assert np.array_equal(a.values, b.values)

    @pytest.mark.parametrize("shape", [(256, 256), (50, 70), (300, 41), (17, 17)])
    def test_constant_image_gives_zero_hash(self, shape):
        # DCT is a lone DC term at (0, 0); only map entry (0, 0) sees it and that is discarded
        h = fdns.hash_image(np.full(shape, 137.0))
        assert np.max(np.abs(h.values)) < 1e-9

    def test_row_constant_image_gives_zero_hash(self):
        # energy confined to the first DCT row only reaches the discarded first map row
        ramp = np.tile(np.linspace(0, 255, 200), (150, 1))
        assert np.max(np.abs(fdns.hash_image(ramp).values)) < 1e-9

    @pytest.mark.parametrize("shape", [(31, 29), (256, 256), (480, 640)])
    def test_length_64(self, shape):
        assert len(fdns.hash_image(np.random.default_rng(0).uniform(0, 255, shape)).values) == 64

    def test_file_and_array_agree(self, tmp_path):
        from fdnshash import imagecore

        img = np.random.default_rng(11).integers(0, 256, (40, 50, 3)).astype(float)
        imagecore.save_image(img, tmp_path / "a.png")
        imagecore.save_image(img, tmp_path / "b.bmp")
        h_png = fdns.hash_image(tmp_path / "a.png")
        assert h_png == fdns.hash_image(img)
        assert h_png == fdns.hash_image(str(tmp_path / "b.bmp"))

    def test_preprocess_order(self):
        img = np.random.default_rng(12).uniform(0, 255, (30, 40))
        p = FdnsParams(canonical_w=32, canonical_h=24)
        assert fdns.preprocess(img, p).shape == (24, 32)


def _h(values, params=FdnsParams()):
    return HashVector(np.asarray(values, float), params.fingerprint)


class TestCorrelation:
    def test_self(self):
        h = _h(np.random.default_rng(0).normal(size=64))
        assert fdns.correlation(h, h) == pytest.approx(1.0, abs=1e-12)

    def test_negated(self):
        v = np.random.default_rng(1).normal(size=64)
        assert fdns.correlation(_h(v), _h(-v)) == pytest.approx(-1.0, abs=1e-12)

    def test_orthogonal_patterns(self):
        a = [1 if k % 2 == 0 else -1 for k in range(64)]
        b = [1 if k % 4 < 2 else -1 for k in range(64)]
        assert pearson_direct(a, b) == 0.0
        assert fdns.correlation(_h(a), _h(b)) == 0.0

    def test_against_direct(self):
        rng = np.random.default_rng(2)
        a, b = rng.normal(size=64), rng.normal(size=64)
        assert fdns.correlation(_h(a), _h(b)) == pytest.approx(pearson_direct(a, b), abs=1e-12)

    def test_fingerprint_mismatch(self):
        v = np.arange(64.0)
        with pytest.raises(IncompatibleHashError):
            fdns.correlation(_h(v), _h(v, FdnsParams(gaussian_sigma=2.0)))

    def test_degenerate_rules(self):
        zero, const = _h(np.zeros(64)), _h(np.full(64, 5.0))
        textured = _h(np.arange(64.0))
        assert fdns.correlation(zero, zero) == 1.0
        assert fdns.correlation(zero, _h(np.full(64, 1e-11))) == 1.0
        assert fdns.correlation(zero, const) == 0.0
        assert fdns.correlation(zero, textured) == 0.0
        assert fdns.correlation(textured, const) == 0.0

    def test_hash_length_enforced(self):
        with pytest.raises(InvalidInputError):
            HashVector(np.zeros(63), "x")

    @settings(max_examples=100, deadline=None)
    @given(
        arrays(np.float64, 64, elements=st.floats(-100, 100)),
        arrays(np.float64, 64, elements=st.floats(-100, 100)),
        st.floats(0.01, 100),
        st.floats(-100, 100),
    )
    def test_affine_invariance(self, a, b, alpha, beta):
        if np.var(a) < 1e-6 or np.var(b) < 1e-6:
            return
        r = fdns.correlation(_h(a), _h(b))
        assert fdns.correlation(_h(a), _h(alpha * b + beta)) == pytest.approx(r, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, 64, elements=st.floats(-1e3, 1e3)), arrays(np.float64, 64, elements=st.floats(-1e3, 1e3)))
    def test_symmetric_and_bounded(self, a, b):
        r = fdns.correlation(_h(a), _h(b))
        assert r == fdns.correlation(_h(b), _h(a))
        assert -1.0 <= r <= 1.0
