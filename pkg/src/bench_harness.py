"""
Noise-level sweep of the mean and median filters, with tables, SVG plots and
the mean/median crossover derived from one aggregation path.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import DimensionMismatch, DomainMismatch, InvalidVariance, MissingSeries
from image_core import Domain, Image, round_half_away, to_byte, to_unit
from quality_metrics import format_metric, metrics_report
from spatial_filters import FilterKind, WindowSpec, apply_filter
from speckle_noise import NoiseSpec, add_speckle

logger = logging.getLogger(__name__)

TOOLKIT_VERSION = "0.1.0"

PUBLISHED_LEVELS = (
    0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09,
    0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9,
)

# Published PSNR (dB) and MSE per filter, one value per PUBLISHED_LEVELS entry
PUBLISHED_PSNR = {
    FilterKind.MEAN: (28.65, 26.52, 25.14, 24.11, 23.29, 22.62, 22.04, 21.53, 21.09,
                      20.69, 18.00, 16.42, 15.34, 14.67, 14.18, 13.80, 13.49, 13.23),
    FilterKind.MEDIAN: (24.57, 23.46, 22.60, 21.90, 21.30, 20.78, 20.32, 19.92, 19.55,
                        19.21, 16.85, 15.39, 14.38, 13.72, 13.25, 12.87, 12.57, 12.30),
}
PUBLISHED_MSE = {
    FilterKind.MEAN: (14.79, 18.53, 21.44, 23.89, 25.99, 27.95, 29.70, 31.39, 32.92,
                      34.32, 45.99, 54.15, 59.93, 62.46, 63.38, 63.61, 63.53, 63.10),
    FilterKind.MEDIAN: (25.24, 26.93, 28.29, 29.41, 30.49, 31.48, 32.37, 33.23, 33.95,
                        34.71, 40.92, 45.59, 49.57, 52.88, 55.74, 58.41, 60.83, 62.86),
}

DEFAULT_SEEDS = (1, 2, 3, 4, 5)

SERIES_COLORS = {
    FilterKind.MEAN: "#1f77b4",
    FilterKind.MEDIAN: "#d62728",
}

# Synthetic coastal scene, unit intensities and fractions of the image size
SEA_LEVEL = 0.30
SLICK_LEVEL = 10 / 255
WAKE_LEVEL = 0.6
COAST_LINE = 0.58
SLICK_CENTRES = ((0.25, 0.70), (0.75, 0.70), (0.25, 0.89), (0.75, 0.89))
SLICK_AXES = (0.21, 0.073)
SHIP_COUNT = 8


class Reference(Enum):
    CLEAN = "clean"
    NOISY = "noisy"


class Metric(Enum):
    MSE = "mse"
    PSNR = "psnr"

    @property
    def label(self) -> str:
        return "MSE" if self is Metric.MSE else "PSNR (dB)"


class TableFormat(Enum):
    CSV = "csv"
    MARKDOWN = "md"


@dataclass(frozen=True)
class SweepConfig:
    levels: Tuple[float, ...] = PUBLISHED_LEVELS
    filters: Tuple[FilterKind, ...] = (FilterKind.MEAN, FilterKind.MEDIAN)
    window: WindowSpec = field(default_factory=WindowSpec)
    seeds: Tuple[int, ...] = DEFAULT_SEEDS
    reference: Reference = Reference.CLEAN

    def __post_init__(self):
        for name in ("levels", "filters", "seeds"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

        if not self.levels:
            raise InvalidVariance("a sweep needs at least one variance level")
        for level in self.levels:
            if not (0.0 < level <= 1.0):
                raise InvalidVariance(f"variance level {level} is outside (0, 1]")
        if any(lo >= hi for lo, hi in zip(self.levels[:-1], self.levels[1:])):
            raise InvalidVariance("variance levels must be strictly increasing")
        if not self.filters or len(set(self.filters)) != len(self.filters):
            raise ValueError("a sweep needs one or more distinct filters")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ValueError("a sweep needs one or more distinct seeds")

    def describe(self) -> Dict:
        return {
            "levels": list(self.levels),
            "filters": [f.value for f in self.filters],
            "window": self.window.size,
            "border": self.window.border.value,
            "seeds": list(self.seeds),
            "reference": self.reference.value,
        }


@dataclass(frozen=True)
class SweepRow:
    filter: FilterKind
    variance: float
    seed: int
    mse: float
    psnr: float

    def value(self, metric: Metric) -> float:
        return self.mse if metric is Metric.MSE else self.psnr


@dataclass(frozen=True)
class SweepResult:
    rows: Tuple[SweepRow, ...]
    meta: Dict = field(default_factory=dict)

    @property
    def levels(self) -> List[float]:
        return sorted({row.variance for row in self.rows})

    @property
    def filters(self) -> List[FilterKind]:
        seen = []
        for row in self.rows:
            if row.filter not in seen:
                seen.append(row.filter)
        return seen


@dataclass(frozen=True)
class CrossoverReport:
    metric: Metric
    bracket: Optional[Tuple[float, float]]
    winner_below: Optional[FilterKind] = None
    winner_above: Optional[FilterKind] = None

    def describe(self) -> str:
        name = self.metric.value.upper()
        if self.bracket is None:
            return f"{name}: no crossover between the mean and median filters"
        lo, hi = self.bracket
        return (f"{name}: crossover between {lo:g} and {hi:g} "
                f"({self.winner_below.value} better at {lo:g}, {self.winner_above.value} better at {hi:g})")


# SWEEP
def run_sweep(img: Image, config: SweepConfig = SweepConfig(), workers: int = 1,
              image_id: str = "image") -> SweepResult:
    """
    For every (level, seed): quantize a speckled copy of the image, run each
    filter on it and score the result against the configured reference.
    Cells run on `workers` threads; row order is always filter, level, seed.
    """
    if img.domain is not Domain.BYTE:
        raise DomainMismatch("sweeps run on byte images")
    config.window.check_fits(img)

    clean_unit = to_unit(img)
    cells = [(li, si) for li in range(len(config.levels)) for si in range(len(config.seeds))]

    def run_cell(cell):
        li, si = cell
        level, seed = config.levels[li], config.seeds[si]
        noisy = to_byte(add_speckle(clean_unit, NoiseSpec(level, seed)))
        reference = img if config.reference is Reference.CLEAN else noisy

        out = []
        for fi, kind in enumerate(config.filters):
            report = metrics_report(reference, apply_filter(kind, noisy, config.window))
            out.append(((fi, li, si), SweepRow(kind, level, seed, report.mse, report.psnr)))
        logger.debug("cell v=%g seed=%d done", level, seed)
        return out

    logger.info("sweeping %d levels x %d seeds x %d filters on %s (%d worker%s)",
                len(config.levels), len(config.seeds), len(config.filters), image_id,
                workers, "" if workers == 1 else "s")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            keyed = [item for cell_rows in pool.map(run_cell, cells) for item in cell_rows]
    else:
        keyed = [item for cell in cells for item in run_cell(cell)]

    keyed.sort(key=lambda item: item[0])
    meta = {"image": image_id, "config": config.describe(), "version": TOOLKIT_VERSION}
    return SweepResult(tuple(row for _, row in keyed), meta)


def aggregate(result: SweepResult, metric: Metric) -> Dict[FilterKind, Dict[float, float]]:
    """Seed-averaged metric per filter and level; every emitter reads from here."""
    grouped: Dict[FilterKind, Dict[float, List[float]]] = {}
    for row in result.rows:
        grouped.setdefault(row.filter, {}).setdefault(row.variance, []).append(row.value(metric))

    return {
        kind: {level: math.fsum(values) / len(values) for level, values in sorted(by_level.items())}
        for kind, by_level in grouped.items()
    }


def published_result() -> SweepResult:
    """The published PSNR and MSE tables as a single-seed SweepResult."""
    rows = []
    for kind in (FilterKind.MEAN, FilterKind.MEDIAN):
        for i, level in enumerate(PUBLISHED_LEVELS):
            rows.append(SweepRow(kind, level, 0, PUBLISHED_MSE[kind][i], PUBLISHED_PSNR[kind][i]))
    return SweepResult(tuple(rows), {"image": "published tables", "version": TOOLKIT_VERSION})


# ANALYSIS
def crossover_analysis(result: SweepResult, metric: Metric) -> CrossoverReport:
    """
    First pair of adjacent levels where the seed-averaged ordering of the mean
    and median filters flips. Lower is better for MSE, higher for PSNR.
    """
    averages = aggregate(result, metric)
    for kind in (FilterKind.MEAN, FilterKind.MEDIAN):
        if kind not in averages:
            raise MissingSeries(f"crossover needs a {kind.value} filter series")

    mean_series, median_series = averages[FilterKind.MEAN], averages[FilterKind.MEDIAN]
    levels = [v for v in result.levels if v in mean_series and v in median_series]
    signs = [_sign(mean_series[v] - median_series[v]) for v in levels]

    for (lo, s_lo), (hi, s_hi) in zip(zip(levels, signs), zip(levels[1:], signs[1:])):
        if s_lo * s_hi < 0:
            return CrossoverReport(metric, (lo, hi), _winner(s_lo, metric), _winner(s_hi, metric))
    return CrossoverReport(metric, None)


# EMITTERS
def emit_table(result: SweepResult, metric: Metric, fmt: TableFormat = TableFormat.CSV) -> str:
    """One row per filter, one column per level, seed-averaged cells to 2 decimals."""
    averages = aggregate(result, metric)
    levels = result.levels
    header = ["filter"] + [_level_label(v) for v in levels]
    body = [[kind.value] + [format_metric(_cell(averages, kind, v), 2) for v in levels]
            for kind in result.filters]

    if fmt is TableFormat.CSV:
        return "".join(",".join(line) + "\n" for line in [header] + body)

    lines = [_markdown_row(header), _markdown_row(["---"] * len(header))]
    lines += [_markdown_row(line) for line in body]
    return "\n".join(lines) + "\n"


def emit_sweep_csv(result: SweepResult) -> str:
    lines = ["filter,variance,seed,mse,psnr"]
    for row in result.rows:
        lines.append(f"{row.filter.value},{row.variance:.6g},{row.seed},{row.mse:.6g},{row.psnr:.6g}")
    return "\n".join(lines) + "\n"


def emit_plot(result: SweepResult, metric: Metric, log_x: bool = False) -> str:
    """Self-contained SVG line chart, one polyline per filter."""
    averages = aggregate(result, metric)
    levels = result.levels
    width, height = 720, 440
    left, right, top, bottom = 70, width - 150, 50, height - 60

    xs = [math.log10(v) for v in levels] if log_x else list(levels)
    finite = [y for series in averages.values() for y in series.values() if math.isfinite(y)]
    y_lo, y_hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = (y_hi - y_lo) * 0.05
    y_lo, y_hi = y_lo - pad, y_hi + pad

    px = _scale(xs, left, right)

    def py(value: float) -> float:
        if not math.isfinite(value):
            return float(top)
        return bottom - (value - y_lo) / (y_hi - y_lo) * (bottom - top)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width / 2:.2f}" y="28" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{metric.value.upper()} of filters vs speckle noise variance</text>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#333333"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="#333333"/>',
    ]

    for i in range(5):
        value = y_lo + (y_hi - y_lo) * i / 4
        y = py(value)
        parts.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="#333333"/>')
        parts.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{value:.2f}</text>')

    step = max(1, math.ceil(len(levels) / 9))
    for i, (level, x) in enumerate(zip(levels, px)):
        parts.append(f'<line x1="{x:.2f}" y1="{bottom}" x2="{x:.2f}" y2="{bottom + 4}" stroke="#333333"/>')
        if i % step == 0 or i == len(levels) - 1:
            parts.append(f'<text x="{x:.2f}" y="{bottom + 18}" text-anchor="middle" font-family="sans-serif" '
                         f'font-size="11">{_level_label(level)}</text>')

    parts.append(f'<text x="{(left + right) / 2:.2f}" y="{height - 16}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">Speckle noise variance{" (log scale)" if log_x else ""}</text>')
    parts.append(f'<text x="18" y="{(top + bottom) / 2:.2f}" text-anchor="middle" font-family="sans-serif" '
                 f'font-size="12" transform="rotate(-90 18 {(top + bottom) / 2:.2f})">{metric.label}</text>')

    for n, kind in enumerate(result.filters):
        color = SERIES_COLORS.get(kind, "#2ca02c")
        points = " ".join(f"{x:.2f},{py(_cell(averages, kind, v)):.2f}" for v, x in zip(levels, px))
        parts.append(f'<polyline data-filter="{kind.value}" points="{points}" fill="none" '
                     f'stroke="{color}" stroke-width="2"/>')
        ly = top + 10 + 20 * n
        parts.append(f'<line x1="{right + 15}" y1="{ly}" x2="{right + 40}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{right + 46}" y="{ly + 4}" font-family="sans-serif" font-size="12">'
                     f'{kind.value} filter</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# SCENE
def synthetic_scene(width: int = 512, height: int = 512, seed: int = 0) -> Image:
    """
    Deterministic coastal scene: saturated land along the top, textured
    mid-dark sea below, four dark elliptical slicks streaked by 1-pixel bright
    wakes every third row, and single-pixel ship returns between the slicks.
    """
    if width < 64 or height < 64:
        raise DimensionMismatch(f"the synthetic scene needs at least 64x64 pixels, got {width}x{height}")

    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2 * math.pi, size=4)
    rows, cols = np.mgrid[0:height, 0:width]
    u = (cols + 0.5) / width
    t = (rows + 0.5) / height

    scene = (SEA_LEVEL
             + 0.03 * np.sin(2 * math.pi * 1.5 * u + phases[0]) * np.cos(2 * math.pi * 2.0 * t + phases[1])
             + 0.015 * np.sin(2 * math.pi * (3.5 * u + 0.5 * t) + phases[2]))

    coast = COAST_LINE + 0.015 * np.sin(2 * math.pi * 2.0 * u + phases[3])
    scene[t < coast] = 1.0

    for cu, ct in SLICK_CENTRES:
        inside = ((u - cu) / SLICK_AXES[0]) ** 2 + ((t - ct) / SLICK_AXES[1]) ** 2 <= 1.0
        scene[inside] = SLICK_LEVEL
        scene[inside & (rows % 3 == 0)] = WAKE_LEVEL

    # ships sit in the open water between the two rows of slicks
    ship_rows = (rng.uniform(0.785, 0.805, SHIP_COUNT) * height).astype(int)
    ship_cols = (rng.uniform(0.05, 0.95, SHIP_COUNT) * width).astype(int)
    scene[ship_rows, ship_cols] = 1.0

    pixels = np.clip(round_half_away(scene * 255.0), 0, 255).astype(np.uint8)
    return Image(pixels, Domain.BYTE)


# INTERNAL HELPERS
def _cell(averages: Dict[FilterKind, Dict[float, float]], kind: FilterKind, level: float) -> float:
    if level not in averages.get(kind, {}):
        raise MissingSeries(f"no {kind.value} filter result at variance {level:g}")
    return averages[kind][level]


def _sign(value: float) -> int:
    if math.isnan(value) or value == 0:
        return 0
    return 1 if value > 0 else -1


def _winner(sign: int, metric: Metric) -> FilterKind:
    """sign is that of (mean - median)."""
    mean_better = sign < 0 if metric is Metric.MSE else sign > 0
    return FilterKind.MEAN if mean_better else FilterKind.MEDIAN


def _level_label(level: float) -> str:
    return f"{level:g}"


def _markdown_row(cells: Sequence[str]) -> str:
    return "| " + " | ".join(cells) + " |"


def _scale(values: Sequence[float], low: float, high: float) -> List[float]:
    min_v, max_v = min(values), max(values)
    if max_v == min_v:
        return [(low + high) / 2.0 for _ in values]
    return [low + (v - min_v) / (max_v - min_v) * (high - low) for v in values]
