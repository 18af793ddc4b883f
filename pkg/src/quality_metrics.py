import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from errors import DimensionMismatch, DomainMismatch
from image_core import Image


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    psnr: float     # math.inf when mse == 0
    peak: float

    def __post_init__(self):
        if self.mse < 0:
            raise ValueError(f"mse cannot be negative, got {self.mse}")


def psnr_from_mse(mse: float, peak: float) -> float:
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def format_metric(value: float, digits: int = 6) -> str:
    """Fixed-point text with `digits` decimals, "inf" for an infinite PSNR."""
    if math.isinf(value):
        return "inf"
    if math.isnan(value):
        return "nan"
    # Decimal(value) is the exact binary value, so only true ties round away from zero
    rounded = Decimal(value).quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_UP)
    return f"{rounded:f}"


def mse(reference: Image, candidate: Image) -> float:
    _check_comparable(reference, candidate)
    diff = reference.pixels.astype(np.float64) - candidate.pixels.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(reference: Image, candidate: Image) -> float:
    return psnr_from_mse(mse(reference, candidate), reference.domain.peak)


def metrics_report(reference: Image, candidate: Image) -> MetricsReport:
    error = mse(reference, candidate)
    peak = reference.domain.peak
    return MetricsReport(mse=error, psnr=psnr_from_mse(error, peak), peak=peak)


def _check_comparable(reference: Image, candidate: Image) -> None:
    if reference.pixels.shape != candidate.pixels.shape:
        raise DimensionMismatch(f"cannot compare a {reference.width}x{reference.height} image "
                                f"with a {candidate.width}x{candidate.height} image")
    if reference.domain is not candidate.domain:
        raise DomainMismatch(f"cannot compare a {reference.domain.value} image "
                             f"with a {candidate.domain.value} image")
