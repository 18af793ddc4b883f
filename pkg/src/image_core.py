"""
Image values, gray conversion, value-domain conversions, histograms and file I/O.

Images are immutable: the pixel array is copied on construction and marked
read-only, so an Image can be shared freely between threads.
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from matplotlib.figure import Figure
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from errors import DespeckleError, DimensionMismatch, DomainMismatch, MalformedFile, UnsupportedDepth

logger = logging.getLogger(__name__)

# ITU-R BT.601 luma, in thousandths
LUMA_WEIGHTS = (299, 587, 114)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
PGM_WHITESPACE = b" \t\r\n\v\f"


class Domain(Enum):
    BYTE = "byte"   # integers 0..255
    UNIT = "unit"   # reals 0.0..1.0

    @property
    def peak(self) -> float:
        return 255.0 if self is Domain.BYTE else 1.0


class ImageFormat(Enum):
    PGM = "pgm"
    PNG = "png"


def round_half_away(values: np.ndarray) -> np.ndarray:
    """Round to the nearest integer, ties away from zero (np.round rounds ties to even)."""
    values = np.asarray(values, dtype=np.float64)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Image:
    pixels: np.ndarray          # (height, width), uint8 for BYTE, float64 for UNIT
    domain: Domain = Domain.BYTE

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionMismatch(f"an image needs a non-empty 2-D pixel grid, got shape {arr.shape}")

        if self.domain is Domain.BYTE:
            if arr.dtype != np.uint8:
                if not np.all((arr >= 0) & (arr <= 255) & (arr == np.floor(arr))):
                    raise DomainMismatch("byte images hold integers in 0..255")
                arr = arr.astype(np.uint8)
        else:
            arr = arr.astype(np.float64)
            if not np.all((arr >= 0.0) & (arr <= 1.0)):
                raise DomainMismatch("unit images hold reals in [0.0, 1.0]")

        object.__setattr__(self, "pixels", _frozen(arr))

    @classmethod
    def from_samples(cls, width: int, height: int, samples: Sequence, domain: Domain = Domain.BYTE) -> "Image":
        if width < 1 or height < 1:
            raise DimensionMismatch(f"dimensions must be positive, got {width}x{height}")
        flat = np.asarray(samples)
        if flat.size != width * height:
            raise DimensionMismatch(f"{flat.size} samples do not fill a {width}x{height} image")
        return cls(flat.reshape(height, width), domain)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def samples(self) -> np.ndarray:
        """Row-major view of the pixels."""
        return self.pixels.reshape(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.domain is other.domain and np.array_equal(self.pixels, other.pixels)

    __hash__ = None

    # Nice helper for debugging
    def summary(self) -> Dict:
        return {
            "size": f"{self.width}x{self.height}",
            "domain": self.domain.value,
            "min": round(float(self.pixels.min()), 2),
            "max": round(float(self.pixels.max()), 2),
            "mean": round(float(self.pixels.mean()), 2),
        }


@dataclass(frozen=True, eq=False)
class RgbImage:
    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionMismatch(f"an RGB image needs a (height, width, 3) grid, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if not np.all((arr >= 0) & (arr <= 255) & (arr == np.floor(arr))):
                raise DomainMismatch("RGB channels hold integers in 0..255")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "pixels", _frozen(arr))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def samples(self) -> np.ndarray:
        """Row-major (r, g, b) triples."""
        return self.pixels.reshape(-1, 3)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RgbImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True)
class Histogram:
    bins: Tuple[int, ...]   # one count per byte level

    def __post_init__(self):
        if len(self.bins) != 256:
            raise ValueError(f"a histogram has 256 bins, got {len(self.bins)}")
        if any(count < 0 for count in self.bins):
            raise ValueError("histogram counts cannot be negative")

    @property
    def total(self) -> int:
        return sum(self.bins)

    def mean_level(self) -> float:
        if self.total == 0:
            return 0.0
        return sum(level * count for level, count in enumerate(self.bins)) / self.total


# CONVERSIONS
def to_gray(img: RgbImage) -> Image:
    if not isinstance(img, RgbImage):
        raise DomainMismatch("to_gray expects an RGB image")
    rgb = img.pixels.astype(np.int64)
    # integer arithmetic keeps .5 ties exact; +500 rounds them up
    luma = (rgb[..., 0] * LUMA_WEIGHTS[0] + rgb[..., 1] * LUMA_WEIGHTS[1] + rgb[..., 2] * LUMA_WEIGHTS[2] + 500) // 1000
    return Image(luma.astype(np.uint8), Domain.BYTE)


def as_gray(img: Union[Image, RgbImage]) -> Image:
    """Gray images pass through unchanged, RGB images go through to_gray."""
    if isinstance(img, RgbImage):
        return to_gray(img)
    return img


def to_unit(img: Image) -> Image:
    if img.domain is not Domain.BYTE:
        raise DomainMismatch("to_unit expects a byte image")
    return Image(img.pixels / 255.0, Domain.UNIT)


def to_byte(img: Image) -> Image:
    if img.domain is not Domain.UNIT:
        raise DomainMismatch("to_byte expects a unit image")
    scaled = round_half_away(img.pixels * 255.0)
    return Image(np.clip(scaled, 0, 255).astype(np.uint8), Domain.BYTE)


def histogram(img: Image) -> Histogram:
    if img.domain is not Domain.BYTE:
        raise DomainMismatch("histograms are taken over byte images")
    counts = np.bincount(img.samples, minlength=256)
    return Histogram(tuple(int(c) for c in counts))


def plot_histogram(hist: Histogram, path: Union[str, Path], title: str = "Histogram distribution") -> None:
    """Bar chart of a histogram written as PNG."""
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    ax.bar(range(256), hist.bins, width=1.0, color="dimgray")
    ax.axvline(hist.mean_level(), color="tab:red", linestyle="--", label=f"mean level {hist.mean_level():.1f}")
    ax.legend(loc="upper right")
    ax.set_xlim(-0.5, 255.5)
    ax.set_title(title)
    ax.set_xlabel("Gray level")
    ax.set_ylabel("Pixel count")
    fig.tight_layout()
    fig.savefig(str(path), format="png")
    logger.info("wrote histogram plot %s", path)


# FILE I/O
def format_for_path(path: Union[str, Path]) -> ImageFormat:
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return ImageFormat.PGM
    if suffix == ".png":
        return ImageFormat.PNG
    raise DespeckleError(f"cannot tell the image format of '{path}' (use .pgm or .png)")


def load_image(path: Union[str, Path]) -> Union[Image, RgbImage]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")

    data = path.read_bytes()
    if data[:2] in (b"P2", b"P5"):
        logger.debug("reading %s as PGM (%s)", path, data[:2].decode())
        return _decode_pgm(data)
    if data.startswith(PNG_MAGIC):
        logger.debug("reading %s as PNG", path)
        return _decode_png(path, data)
    raise MalformedFile(f"{path}: neither a PGM (P2/P5) nor a PNG file")


def save_image(img: Union[Image, RgbImage], path: Union[str, Path],
               fmt: Optional[ImageFormat] = None, plain: bool = False) -> None:
    """
    Write an image as PGM (binary P5, or ASCII P2 with plain=True) or PNG.
    Unit images are quantized with to_byte first.
    """
    path = Path(path)
    fmt = fmt or format_for_path(path)
    if isinstance(img, Image) and img.domain is Domain.UNIT:
        img = to_byte(img)

    if fmt is ImageFormat.PGM:
        if isinstance(img, RgbImage):
            raise DomainMismatch("PGM holds single-channel images; convert with to_gray first")
        path.write_bytes(_encode_pgm(img, plain))
    else:
        PILImage.fromarray(np.ascontiguousarray(img.pixels)).save(path, format="PNG")
    logger.debug("wrote %s (%s%s)", path, fmt.value, ", plain" if plain else "")


# INTERNAL HELPERS
def _next_token(data: bytes, pos: int) -> Tuple[bytes, int]:
    """Next whitespace-delimited header token, skipping '#' comments."""
    n = len(data)
    while pos < n:
        if data[pos] in PGM_WHITESPACE:
            pos += 1
        elif data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
        else:
            break

    start = pos
    while pos < n and data[pos] not in PGM_WHITESPACE and data[pos] != ord("#"):
        pos += 1
    if start == pos:
        raise MalformedFile("PGM header is truncated")
    return data[start:pos], pos


def _decode_pgm(data: bytes) -> Image:
    magic = data[:2]
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _next_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise MalformedFile(f"PGM header field is not an integer: {token!r}") from None
    width, height, maxval = fields

    if width <= 0 or height <= 0:
        raise MalformedFile(f"PGM dimensions must be positive, got {width}x{height}")
    if maxval > 255:
        raise UnsupportedDepth(f"16-bit PGM (maxval {maxval}) is not supported")
    if maxval <= 0:
        raise MalformedFile(f"PGM maxval must be positive, got {maxval}")

    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        if pos >= len(data) or data[pos] not in PGM_WHITESPACE:
            raise MalformedFile("P5 raster is missing")
        payload = data[pos + 1:pos + 1 + count]
        if len(payload) < count:
            raise MalformedFile(f"P5 raster holds {len(payload)} bytes, expected {count}")
        values = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
    else:
        tokens = re.sub(rb"#[^\r\n]*", b"", data[pos:]).split()
        if len(tokens) != count:
            raise MalformedFile(f"P2 raster holds {len(tokens)} samples, expected {count}")
        try:
            values = np.array([int(t) for t in tokens], dtype=np.int64)
        except ValueError:
            raise MalformedFile("P2 raster contains a non-integer sample") from None

    if values.min() < 0 or values.max() > maxval:
        raise MalformedFile(f"PGM sample outside 0..{maxval}")
    if maxval != 255:
        values = (values * 510 + maxval) // (2 * maxval)

    return Image(values.reshape(height, width).astype(np.uint8), Domain.BYTE)


def _encode_pgm(img: Image, plain: bool) -> bytes:
    header = f"{'P2' if plain else 'P5'}\n{img.width} {img.height}\n255\n".encode("ascii")
    if not plain:
        return header + img.pixels.tobytes()
    rows = (" ".join(str(int(v)) for v in row) for row in img.pixels)
    return header + ("\n".join(rows) + "\n").encode("ascii")


def _decode_png(path: Path, data: bytes) -> Union[Image, RgbImage]:
    # IHDR bit depth sits at byte 24; Pillow narrows 16-bit RGB to 8 bits silently
    if data[12:16] == b"IHDR" and len(data) > 24 and data[24] > 8:
        raise UnsupportedDepth(f"{path}: {data[24]}-bit PNG is deeper than 8 bits")
    try:
        with PILImage.open(path) as im:
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I", "F"):
                raise UnsupportedDepth(f"{path}: {mode} PNG is deeper than 8 bits")
            if mode in ("RGBA", "LA", "PA", "La", "RGBa") or (mode == "P" and "transparency" in im.info):
                raise UnsupportedDepth(f"{path}: PNG with an alpha channel is not supported")
            if mode == "1":
                im = im.convert("L")
            elif mode == "P":
                im = im.convert("RGB")
            elif mode not in ("L", "RGB"):
                raise UnsupportedDepth(f"{path}: PNG mode {mode} is not supported")
            arr = np.array(im)
    except (UnidentifiedImageError, SyntaxError, EOFError) as exc:
        raise MalformedFile(f"{path}: {exc}") from exc
    except OSError as exc:
        # Pillow reports truncated streams as OSError
        raise MalformedFile(f"{path}: {exc}") from exc

    if arr.ndim == 2:
        return Image(arr, Domain.BYTE)
    return RgbImage(arr)
