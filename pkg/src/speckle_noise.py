"""
Multiplicative speckle injection, J = I + n*I, clipped to [0, 1].

The noise value at pixel index k is a pure function of (seed, k): a SplitMix64
mix of the seed-derived key and the index. Any band of rows can therefore be
generated on its own and the assembled field is bit-identical to a single pass.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from errors import DimensionMismatch, DomainMismatch, InvalidVariance
from image_core import Domain, Image

logger = logging.getLogger(__name__)

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
MIX_2 = np.uint64(0x94D049BB133111EB)
UINT64_MASK = (1 << 64) - 1


class NoiseDistribution(Enum):
    UNIFORM = "uniform"


@dataclass(frozen=True)
class NoiseSpec:
    variance: float
    seed: int = 0
    distribution: NoiseDistribution = NoiseDistribution.UNIFORM

    def __post_init__(self):
        if not (0.0 < self.variance <= 1.0):
            raise InvalidVariance(f"speckle variance must lie in (0, 1], got {self.variance}")
        if not (0 <= self.seed <= UINT64_MASK):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not isinstance(self.distribution, NoiseDistribution):
            raise ValueError(f"unsupported noise distribution: {self.distribution!r}")

    @property
    def half_width(self) -> float:
        """Support bound sqrt(3v) of the zero-mean uniform with variance v."""
        return math.sqrt(3.0 * self.variance)


@dataclass(frozen=True, eq=False)
class NoiseField:
    values: np.ndarray  # (height, width) float64

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def noise_rows(width: int, spec: NoiseSpec, row_start: int, row_stop: int) -> np.ndarray:
    """Rows [row_start, row_stop) of the noise field for an image `width` pixels wide."""
    if width < 1 or row_start < 0 or row_stop < row_start:
        raise DimensionMismatch(f"invalid row band [{row_start}, {row_stop}) for width {width}")

    index = np.arange(row_start * width, row_stop * width, dtype=np.uint64)
    bits = _splitmix64(_seed_key(spec.seed) + (index + np.uint64(1)) * GOLDEN_GAMMA)
    # top 53 bits -> uniform on [0, 1)
    unit = (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
    values = (2.0 * unit - 1.0) * spec.half_width
    return values.reshape(row_stop - row_start, width)


def noise_field(width: int, height: int, spec: NoiseSpec) -> NoiseField:
    if width < 1 or height < 1:
        raise DimensionMismatch(f"dimensions must be positive, got {width}x{height}")
    values = noise_rows(width, spec, 0, height)
    values.setflags(write=False)
    return NoiseField(values)


def add_speckle(img: Image, spec: NoiseSpec) -> Image:
    if img.domain is not Domain.UNIT:
        raise DomainMismatch("speckle is injected into unit images; convert with to_unit first")

    n = noise_field(img.width, img.height, spec).values
    noisy = np.clip(img.pixels + n * img.pixels, 0.0, 1.0)
    logger.debug("speckle v=%g seed=%d on %dx%d image", spec.variance, spec.seed, img.width, img.height)
    return Image(noisy, Domain.UNIT)


# INTERNAL HELPERS
def _splitmix64(z: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps modulo 2**64
    z = (z ^ (z >> np.uint64(30))) * MIX_1
    z = (z ^ (z >> np.uint64(27))) * MIX_2
    return z ^ (z >> np.uint64(31))


def _seed_key(seed: int) -> np.uint64:
    key = _splitmix64(np.array([seed], dtype=np.uint64))
    return key[0]
