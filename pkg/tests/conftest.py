import numpy as np
import pytest

from edgetrace.imgproc import write_pgm


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


def make_two_squares_mask(height=480, width=640, side=40,
                          x_offsets=(100, 400), y=220):
    """Binary scene with two filled squares at the given x offsets,
    vertically aligned; the standard calibration fixture elsewhere in
    the suite (square centers 300 px apart for the defaults)."""
    mask = np.zeros((height, width), bool)
    for x in x_offsets:
        mask[y:y + side, x:x + side] = True
    return mask


@pytest.fixture
def two_squares_mask():
    return make_two_squares_mask()


def write_frame(path, img):
    path.write_bytes(write_pgm(np.asarray(img, np.uint8)))
