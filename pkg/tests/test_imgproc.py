import numpy as np
import pytest

from edgetrace.errors import (
    MalformedHeaderError,
    NonPositiveSigmaError,
    ThresholdOrderError,
    TruncatedDataError,
    UnsupportedMaxvalError,
    ZeroIterationsError,
)
from edgetrace.imgproc import (
    canny,
    check_selem,
    close_gaps,
    cross_selem,
    dilate,
    erode,
    gaussian_blur,
    load_pgm,
    reflect_selem,
    sobel_magnitude,
    square_selem,
    write_pgm,
)
from oracles import conv2_reflect, dilate_scan, erode_scan, gaussian_kernel_1d


class TestPgm:
    def test_ascii_basic(self):
        img = load_pgm(b"P2 2 2 255 0 0 255 255")
        assert img.dtype == np.uint8
        assert img.tolist() == [[0, 0], [255, 255]]

    def test_binary_basic(self):
        img = load_pgm(b"P5 3 2 255\n" + bytes([1, 2, 3, 4, 5, 6]))
        assert img.tolist() == [[1, 2, 3], [4, 5, 6]]

    def test_comments_between_tokens(self):
        data = b"P2 # format\n2 # width\n# interjection\n2 255\n0 0 255 255"
        assert load_pgm(data).tolist() == [[0, 0], [255, 255]]

    def test_binary_truncated_by_one_byte(self):
        with pytest.raises(TruncatedDataError):
            load_pgm(b"P5 2 2 255\n" + bytes(3))

    def test_ascii_truncated(self):
        with pytest.raises(TruncatedDataError):
            load_pgm(b"P2 2 2 255 0 0 255")

    def test_color_magic_rejected(self):
        with pytest.raises(MalformedHeaderError):
            load_pgm(b"P6 2 2 255\n" + bytes(12))

    def test_garbage_magic_rejected(self):
        with pytest.raises(MalformedHeaderError):
            load_pgm(b"Q5 2 2 255\n" + bytes(4))

    def test_wide_maxval_rejected(self):
        with pytest.raises(UnsupportedMaxvalError):
            load_pgm(b"P5 2 2 65535\n" + bytes(8))

    def test_zero_dimension_rejected(self):
        with pytest.raises(MalformedHeaderError):
            load_pgm(b"P2 0 2 255 ")

    def test_nonnumeric_header_rejected(self):
        with pytest.raises(MalformedHeaderError):
            load_pgm(b"P2 two 2 255 0 0")

    def test_ascii_sample_above_range_rejected(self):
        with pytest.raises(MalformedHeaderError):
            load_pgm(b"P2 2 1 255 300 0")

    def test_roundtrip_both_formats(self, rng):
        img = rng.integers(0, 256, size=(13, 7), dtype=np.uint8)
        assert np.array_equal(load_pgm(write_pgm(img)), img)
        assert np.array_equal(load_pgm(write_pgm(img, ascii_format=True)), img)


class TestGaussianBlur:
    def test_constant_image_unchanged(self):
        img = np.full((11, 17), 128, np.uint8)
        assert np.array_equal(gaussian_blur(img, 2.3), img)

    def test_impulse_centered_and_mass_conserved(self):
        img = np.zeros((9, 9), np.uint8)
        img[4, 4] = 255
        out = gaussian_blur(img, 1.0)
        assert np.unravel_index(np.argmax(out), out.shape) == (4, 4)
        # per-pixel rounding can drop at most half a level each
        assert abs(int(out.sum()) - 255) <= out.size / 2

    def test_matches_dense_convolution_oracle(self, rng):
        img = rng.integers(0, 256, size=(16, 16), dtype=np.uint8)
        g = gaussian_kernel_1d(1.5)
        dense = conv2_reflect(img, np.outer(g, g))
        out = gaussian_blur(img, 1.5).astype(float)
        assert np.max(np.abs(out - dense)) <= 1.0

    def test_nonpositive_sigma_rejected(self):
        img = np.zeros((4, 4), np.uint8)
        with pytest.raises(NonPositiveSigmaError):
            gaussian_blur(img, 0.0)
        with pytest.raises(NonPositiveSigmaError):
            gaussian_blur(img, -1.0)


class TestSobel:
    def test_horizontal_ramp_magnitude(self):
        ramp = (10 * np.arange(10, dtype=np.uint8))[None, :].repeat(8, axis=0)
        mag = sobel_magnitude(ramp)
        # 3x3 Sobel of a linear ramp: 4 * step per column pair = 80
        assert np.allclose(mag[:, 1:-1], 80.0)
        # reflect padding cancels the gradient at the outer columns
        assert np.allclose(mag[:, [0, -1]], 0.0)


class TestCanny:
    def test_uniform_image_empty(self):
        img = np.full((32, 32), 77, np.uint8)
        assert not canny(img, 20.0, 80.0, sigma=1.0).any()

    def test_vertical_step_edge(self):
        img = np.zeros((64, 64), np.uint8)
        img[:, 32:] = 255
        edges = canny(img, 20.0, 80.0, sigma=1.0)
        cols = np.nonzero(edges)[1]
        assert cols.size > 0
        assert cols.min() >= 30 and cols.max() <= 33
        rows_with_edge = edges.any(axis=1)
        assert rows_with_edge[1:-1].all()

    def test_output_within_nonzero_gradient(self):
        img = np.zeros((64, 64), np.uint8)
        img[:, 32:] = 255
        edges = canny(img, 20.0, 80.0, sigma=1.0)
        mag = sobel_magnitude(gaussian_blur(img, 1.0))
        assert not edges[mag == 0.0].any()

    def test_threshold_order_rejected(self):
        img = np.zeros((8, 8), np.uint8)
        for low, high in ((100.0, 50.0), (50.0, 50.0), (-1.0, 50.0)):
            with pytest.raises(ThresholdOrderError):
                canny(img, low, high, sigma=1.0)

    def test_nonpositive_sigma_rejected(self):
        img = np.zeros((8, 8), np.uint8)
        with pytest.raises(NonPositiveSigmaError):
            canny(img, 10.0, 50.0, sigma=0.0)


class TestSelems:
    def test_builders(self):
        assert square_selem(3).all() and square_selem(3).shape == (3, 3)
        cross = cross_selem(3)
        assert cross.tolist() == [[False, True, False],
                                  [True, True, True],
                                  [False, True, False]]

    def test_even_sizes_rejected(self):
        with pytest.raises(ValueError):
            square_selem(4)
        with pytest.raises(ValueError):
            cross_selem(2)

    def test_check_selem(self):
        se = square_selem(3)
        assert np.array_equal(check_selem(se), se)
        bad = np.zeros((3, 3), bool)
        bad[0, 0] = True
        with pytest.raises(ValueError):
            check_selem(bad)  # anchor not a member
        with pytest.raises(ValueError):
            check_selem(np.ones((2, 3), bool))

    def test_reflect(self):
        se = np.zeros((3, 3), bool)
        se[1, 1] = True
        se[0, 2] = True
        assert reflect_selem(se)[2, 0]
        assert not reflect_selem(se)[0, 2]


class TestMorphology:
    def test_dilate_empty(self):
        mask = np.zeros((5, 5), bool)
        assert not dilate(mask, square_selem(3)).any()

    def test_dilate_single_pixel(self):
        mask = np.zeros((5, 5), bool)
        mask[2, 2] = True
        out = dilate(mask, square_selem(3))
        expected = np.zeros((5, 5), bool)
        expected[1:4, 1:4] = True
        assert np.array_equal(out, expected)

    def test_erode_full_mask_clears_border(self):
        mask = np.ones((5, 5), bool)
        out = erode(mask, square_selem(3))
        expected = np.zeros((5, 5), bool)
        expected[1:4, 1:4] = True
        assert np.array_equal(out, expected)

    def test_erode_single_pixel_vanishes(self):
        mask = np.zeros((5, 5), bool)
        mask[2, 2] = True
        assert not erode(mask, square_selem(3)).any()

    def test_matches_scan_oracle_cross(self, rng):
        mask = rng.random((32, 32)) < 0.4
        se = cross_selem(3)
        assert np.array_equal(dilate(mask, se), dilate_scan(mask, se))
        assert np.array_equal(erode(mask, se), erode_scan(mask, se))

    def test_matches_scan_oracle_asymmetric(self, rng):
        se = rng.random((3, 5)) < 0.5
        se[1, 2] = True
        for _ in range(5):
            mask = rng.random((24, 24)) < 0.35
            assert np.array_equal(dilate(mask, se), dilate_scan(mask, se))
            assert np.array_equal(erode(mask, se), erode_scan(mask, se))

    def test_extensivity_and_antiextensivity(self, rng):
        for _ in range(20):
            mask = rng.random((32, 32)) < rng.uniform(0.1, 0.7)
            for se in (square_selem(3), cross_selem(3), square_selem(5)):
                assert (dilate(mask, se) | mask == dilate(mask, se)).all()
                assert (erode(mask, se) & mask == erode(mask, se)).all()

    def test_duality_interior(self, rng):
        # away from the image border the complement identity is exact;
        # at the border both operators read off-image as background,
        # which breaks the identity there by construction
        for _ in range(20):
            mask = rng.random((32, 32)) < 0.5
            se = cross_selem(3)
            lhs = erode(mask, se)
            rhs = ~dilate(~mask, reflect_selem(se))
            assert np.array_equal(lhs[1:-1, 1:-1], rhs[1:-1, 1:-1])

    def test_duality_full_grid_with_margin(self, rng):
        for _ in range(20):
            mask = np.zeros((40, 40), bool)
            mask[4:-4, 4:-4] = rng.random((32, 32)) < 0.5
            se = square_selem(3)
            assert np.array_equal(erode(mask, se),
                                  ~dilate(~mask, reflect_selem(se)))

    def test_close_gaps_fills_one_pixel_gap(self):
        mask = np.zeros((11, 11), bool)
        mask[5, 1:4] = True
        mask[5, 5:8] = True
        out = close_gaps(mask, square_selem(3), iterations=1)
        assert out[5, 4]
        assert (out & mask == mask).all()

    def test_close_gaps_idempotent_on_closed_mask(self):
        mask = np.zeros((9, 9), bool)
        mask[3:6, 3:6] = True
        once = close_gaps(mask, square_selem(3))
        assert np.array_equal(once, mask)

    def test_close_gaps_idempotence_random(self, rng):
        for _ in range(20):
            mask = rng.random((32, 32)) < 0.4
            se = square_selem(3)
            once = close_gaps(mask, se)
            assert np.array_equal(close_gaps(once, se), once)

    def test_close_gaps_is_dilations_then_erosions(self, rng):
        mask = rng.random((20, 20)) < 0.4
        se = cross_selem(3)
        manual = erode_scan(erode_scan(dilate_scan(dilate_scan(mask, se), se), se), se)
        assert np.array_equal(close_gaps(mask, se, iterations=2), manual)

    def test_zero_iterations_rejected(self):
        with pytest.raises(ZeroIterationsError):
            close_gaps(np.zeros((4, 4), bool), square_selem(3), iterations=0)
