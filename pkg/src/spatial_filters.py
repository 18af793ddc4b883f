"""
Sliding-window mean and median filters.

Neighborhoods that reach past the image edge are completed by the border
policy: Replicate repeats the nearest edge pixel, ZeroPad substitutes 0.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
from numba import njit
from numpy.lib.stride_tricks import sliding_window_view

from errors import DomainMismatch, InvalidWindow, WindowTooLarge
from image_core import Domain, Image

logger = logging.getLogger(__name__)

# upper bound on neighborhood samples materialized at once by the sorting path
NAIVE_CHUNK_SAMPLES = 1 << 22


class Border(Enum):
    REPLICATE = "replicate"
    ZERO_PAD = "zero"


class FilterKind(Enum):
    MEAN = "mean"
    MEDIAN = "median"


@dataclass(frozen=True)
class WindowSpec:
    size: int = 3
    border: Border = Border.REPLICATE

    def __post_init__(self):
        if isinstance(self.size, bool) or not isinstance(self.size, (int, np.integer)):
            raise InvalidWindow(f"window size must be an integer, got {self.size!r}")
        if self.size < 1 or self.size % 2 == 0:
            raise InvalidWindow(f"window size must be odd and at least 1, got {self.size}")

    @property
    def radius(self) -> int:
        return self.size // 2

    @property
    def count(self) -> int:
        """M, the number of pixels in the neighborhood."""
        return self.size * self.size

    def check_fits(self, img: Image) -> None:
        limit = 2 * min(img.width, img.height) - 1
        if self.size > limit:
            raise WindowTooLarge(f"a {self.size}x{self.size} window exceeds the {limit} allowed "
                                 f"for a {img.width}x{img.height} image")


def sample_with_border(img: Image, i: int, j: int, border: Border) -> Union[int, float]:
    """Pixel at row i, column j; out-of-range coordinates follow the border policy."""
    if 0 <= i < img.height and 0 <= j < img.width:
        return img.pixels[i, j].item()
    if border is Border.ZERO_PAD:
        return 0 if img.domain is Domain.BYTE else 0.0
    i = min(max(i, 0), img.height - 1)
    j = min(max(j, 0), img.width - 1)
    return img.pixels[i, j].item()


def mean_filter(img: Image, window: WindowSpec) -> Image:
    window.check_fits(img)
    if window.size == 1:
        return img

    k, m = window.size, window.count
    if img.domain is Domain.BYTE:
        sums = _box_sums(_padded(img, window).astype(np.int64), k)
        # round half away from zero on non-negative integers: floor((2s + M) / 2M)
        out = (2 * sums + m) // (2 * m)
        return Image(out.astype(np.uint8), Domain.BYTE)

    padded = _padded(img, window)
    views = sliding_window_view(padded, (k, k))
    # integral-image sums drift by a few ulps; a mean never leaves its window's range
    means = np.clip(_box_sums(padded, k) / m, views.min(axis=(-2, -1)), views.max(axis=(-2, -1)))
    return Image(means, Domain.UNIT)


def median_filter_naive(img: Image, window: WindowSpec) -> Image:
    """Sort each neighborhood ascending and keep the middle element."""
    window.check_fits(img)
    if window.size == 1:
        return img

    k, m = window.size, window.count
    middle = (m - 1) // 2
    views = sliding_window_view(_padded(img, window), (k, k))
    out = np.empty(img.pixels.shape, dtype=img.pixels.dtype)

    rows_per_chunk = max(1, NAIVE_CHUNK_SAMPLES // (img.width * m))
    for top in range(0, img.height, rows_per_chunk):
        block = views[top:top + rows_per_chunk].reshape(-1, img.width, m)
        out[top:top + rows_per_chunk] = np.sort(block, axis=-1)[..., middle]
    return Image(out, img.domain)


def median_filter_fast(img: Image, window: WindowSpec) -> Image:
    """
    Constant-time median for byte images: a 256-bin histogram slides along
    each row, updating `size` entries per column step, while the median and
    the count of samples below it are nudged into place.
    """
    if img.domain is not Domain.BYTE:
        raise DomainMismatch("the histogram median needs a byte image; use median_filter_naive")
    window.check_fits(img)
    if window.size == 1:
        return img

    out = _sliding_histogram_median(_padded(img, window), img.height, img.width, window.size)
    return Image(out, Domain.BYTE)


def apply_filter(kind: FilterKind, img: Image, window: WindowSpec) -> Image:
    if kind is FilterKind.MEAN:
        return mean_filter(img, window)
    if img.domain is Domain.BYTE:
        return median_filter_fast(img, window)
    return median_filter_naive(img, window)


# INTERNAL HELPERS
def _padded(img: Image, window: WindowSpec) -> np.ndarray:
    r = window.radius
    if window.border is Border.REPLICATE:
        return np.pad(img.pixels, r, mode="edge")
    return np.pad(img.pixels, r, mode="constant", constant_values=0)


def _box_sums(padded: np.ndarray, k: int) -> np.ndarray:
    """k x k window sums from an integral image."""
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=padded.dtype)
    integral[1:, 1:] = padded.cumsum(axis=0).cumsum(axis=1)
    return integral[k:, k:] - integral[:-k, k:] - integral[k:, :-k] + integral[:-k, :-k]


@njit(cache=True, nogil=True)
def _sliding_histogram_median(padded, height, width, k):
    out = np.empty((height, width), dtype=np.uint8)
    hist = np.zeros(256, dtype=np.int32)
    half = (k * k - 1) // 2

    for i in range(height):
        hist[:] = 0
        for di in range(k):
            for dj in range(k):
                hist[padded[i + di, dj]] += 1

        # median = smallest level m with more than `half` samples <= m
        m = 0
        below = 0
        while below + hist[m] <= half:
            below += hist[m]
            m += 1
        out[i, 0] = m

        for j in range(1, width):
            leaving = j - 1
            entering = j + k - 1
            for di in range(k):
                v = padded[i + di, leaving]
                hist[v] -= 1
                if v < m:
                    below -= 1
                v = padded[i + di, entering]
                hist[v] += 1
                if v < m:
                    below += 1

            while below > half:
                m -= 1
                below -= hist[m]
            while below + hist[m] <= half:
                below += hist[m]
                m += 1
            out[i, j] = m

    return out
