import re
from typing import Tuple

from bench_harness import PUBLISHED_LEVELS, Reference
from spatial_filters import Border, FilterKind

BORDER_NAMES = {
    "replicate": Border.REPLICATE, "edge": Border.REPLICATE,
    "zero": Border.ZERO_PAD, "zeropad": Border.ZERO_PAD,
}

KIND_NAMES = {
    "mean": FilterKind.MEAN, "average": FilterKind.MEAN,
    "median": FilterKind.MEDIAN,
}

REFERENCE_NAMES = {
    "clean": Reference.CLEAN,
    "noisy": Reference.NOISY,
}


def parse_levels(levels_input: str) -> Tuple[float, ...]:
    """
    Convert a levels flag ('paper', '0.01,0.05,0.1') into variance levels.
    Range checks happen in SweepConfig.
    """

    text = levels_input.strip().lower()

    # Shorthand for the 18 published levels
    if text == "paper":
        return PUBLISHED_LEVELS

    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError(f"no variance levels in '{levels_input}'")
    return tuple(float(p) for p in parts)


def parse_seeds(seeds_input: str) -> Tuple[int, ...]:
    """
    Convert a seeds flag ('1,2,3' or a range '1-5') into seeds.
    """

    text = seeds_input.strip()

    # Seed ranges ("1-5" means 1, 2, 3, 4, 5)
    range_match = re.fullmatch(r"(\d+)\s*[\-–]\s*(\d+)", text)
    if range_match:
        lo, hi = int(range_match.group(1)), int(range_match.group(2))
        if hi < lo:
            raise ValueError(f"empty seed range '{seeds_input}'")
        return tuple(range(lo, hi + 1))

    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError(f"no seeds in '{seeds_input}'")
    seeds = tuple(int(p) for p in parts)
    if any(s < 0 for s in seeds):
        raise ValueError("seeds are unsigned integers")
    return seeds


def parse_size(size_input: str) -> Tuple[int, int]:
    """'512x512' -> (width, height)."""
    match = re.fullmatch(r"(\d+)\s*[xX×]\s*(\d+)", size_input.strip())
    if not match:
        raise ValueError(f"expected WIDTHxHEIGHT, got '{size_input}'")
    return int(match.group(1)), int(match.group(2))


def parse_border(border_input: str) -> Border:
    return _lookup(BORDER_NAMES, border_input, "border")


def parse_kind(kind_input: str) -> FilterKind:
    return _lookup(KIND_NAMES, kind_input, "filter kind")


def parse_reference(reference_input: str) -> Reference:
    return _lookup(REFERENCE_NAMES, reference_input, "reference")


def _lookup(table, text: str, what: str):
    key = text.strip().lower()
    if key not in table:
        raise ValueError(f"unknown {what} '{text}' (choose from {', '.join(sorted(table))})")
    return table[key]
