import numpy as np
import pytest

from image_core import Domain, Image, RgbImage


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ramp_3x3():
    """3x3 byte image holding 1..9 row-major."""
    return Image.from_samples(3, 3, list(range(1, 10)))


@pytest.fixture
def random_byte_image(rng):
    def make(width=64, height=64):
        return Image(rng.integers(0, 256, size=(height, width), dtype=np.uint8), Domain.BYTE)
    return make


@pytest.fixture
def rgb_image():
    pixels = np.array([[[255, 0, 0], [0, 255, 0]],
                       [[0, 0, 255], [255, 255, 255]]], dtype=np.uint8)
    return RgbImage(pixels)
