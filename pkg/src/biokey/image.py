"""Grayscale image primitives shared by every pipeline stage.

Pixel grids are 8-bit, row-major numpy arrays. All windowed operations
replicate edge pixels, intermediate math runs in float64, and values are
clamped back to [0, 255] only when a result is materialized as an image.
Rounding is half-up (floor(x + 0.5)) everywhere an intensity is produced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError

LEVELS = 256


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def round_half_up(a):
    """Round to nearest integer, ties toward +inf."""
    return np.floor(np.asarray(a, dtype=np.float64) + 0.5)


@dataclass(frozen=True)
class GrayImage:
    """Immutable 8-bit grayscale pixel grid, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 2 or p.size == 0:
            raise InvalidInputError("image must be a non-empty 2D pixel grid")
        if not np.issubdtype(p.dtype, np.integer):
            raise InvalidInputError("image pixels must be integers")
        if p.min() < 0 or p.max() > 255:
            raise InvalidInputError("image intensities must lie in [0, 255]")
        object.__setattr__(self, "pixels", _freeze(p.astype(np.uint8)))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def floats(self) -> np.ndarray:
        """Pixel grid as float64 in [0, 255]."""
        return self.pixels.astype(np.float64)

    def normalized(self) -> np.ndarray:
        """Pixel grid as float64 in [0, 1]."""
        return self.pixels.astype(np.float64) / 255.0


@dataclass(frozen=True)
class BinaryImage:
    """Immutable {0,1} grid, shape (height, width)."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2 or b.size == 0:
            raise InvalidInputError("binary image must be a non-empty 2D grid")
        if not np.issubdtype(b.dtype, np.integer) and b.dtype != np.bool_:
            raise InvalidInputError("binary image must hold integers")
        b = b.astype(np.uint8)
        if not np.isin(b, (0, 1)).all():
            raise InvalidInputError("binary image values must be 0 or 1")
        object.__setattr__(self, "bits", _freeze(b))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class HistogramMapping:
    """Level remap table from histogram equalization."""

    levels: int
    cdf: np.ndarray      # cumulative probability per level, final entry 1
    mapping: np.ndarray  # uint8 lookup, input level -> output level

    def __post_init__(self):
        object.__setattr__(self, "cdf", _freeze(np.asarray(self.cdf, dtype=np.float64)))
        object.__setattr__(self, "mapping", _freeze(np.asarray(self.mapping, dtype=np.uint8)))


@dataclass(frozen=True)
class WienerParams:
    """Adaptive Wiener settings; 3x3 neighborhood is fixed.

    noise_variance None means "estimate as the mean of all local variances".
    """

    noise_variance: float | None = None

    def __post_init__(self):
        if self.noise_variance is not None and self.noise_variance < 0:
            raise InvalidParameterError("noise variance must be >= 0")


@dataclass(frozen=True)
class GaussianKernel:
    sigma: float
    radius: int
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _freeze(np.asarray(self.weights, dtype=np.float64)))


def materialize(values) -> GrayImage:
    """Clamp a real-valued grid to [0, 255] with half-up rounding."""
    out = np.clip(round_half_up(values), 0, 255).astype(np.uint8)
    return GrayImage(out)


def histogram_equalize(img: GrayImage) -> tuple[GrayImage, HistogramMapping]:
    """Spread intensities by mapping each level through the empirical CDF.

    Output level for input level k is round(255 * sum_{j<=k} n_j/n).
    """
    counts = np.bincount(img.pixels.ravel(), minlength=LEVELS)
    cdf = np.cumsum(counts, dtype=np.float64) / float(img.pixels.size)
    mapping = np.clip(round_half_up((LEVELS - 1) * cdf), 0, 255).astype(np.uint8)
    out = GrayImage(mapping[img.pixels])
    return out, HistogramMapping(levels=LEVELS, cdf=cdf, mapping=mapping)


def _window_sums_3x3(values: np.ndarray) -> np.ndarray:
    """Sum of each pixel's 3x3 edge-replicated window, exact for integer input."""
    p = np.pad(values, 1, mode="edge")
    h, w = values.shape
    out = np.zeros((h, w), dtype=values.dtype)
    for dy in range(3):
        for dx in range(3):
            out += p[dy:dy + h, dx:dx + w]
    return out


def wiener_filter(img: GrayImage, params: WienerParams = WienerParams()) -> GrayImage:
    """Adaptive Wiener filter over 3x3 neighborhoods.

    w = mu + ((sigma^2 - v^2) / sigma^2) * (I - mu), with locally constant
    windows (sigma^2 = 0) passing through mu. Window statistics use exact
    integer sums so the result is reproducible bit-for-bit.
    """
    if img.height < 3 or img.width < 3:
        raise InvalidInputError("wiener filter needs an image of at least 3x3")
    p = img.pixels.astype(np.int64)
    s1 = _window_sums_3x3(p)
    s2 = _window_sums_3x3(p * p)
    constant = 9 * s2 == s1 * s1  # zero variance iff the whole window is equal
    mu = s1 / 9.0
    var = s2 / 9.0 - mu * mu
    v2 = params.noise_variance
    if v2 is None:
        v2 = float(np.mean(var))
    i = img.pixels.astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        filtered = mu + ((var - v2) / var) * (i - mu)
    return materialize(np.where(constant, mu, filtered))


def estimate_noise_variance(img: GrayImage) -> float:
    """Mean of the 3x3 local variances; the default Wiener v^2."""
    p = img.pixels.astype(np.int64)
    s1 = _window_sums_3x3(p)
    s2 = _window_sums_3x3(p * p)
    mu = s1 / 9.0
    return float(np.mean(s2 / 9.0 - mu * mu))


def gaussian_kernel(sigma: float) -> GaussianKernel:
    """Normalized 2D Gaussian, weights ~ exp(-(x^2+y^2)/(2 sigma^2)), radius ceil(3 sigma)."""
    if sigma <= 0:
        raise InvalidParameterError("gaussian sigma must be > 0")
    radius = int(np.ceil(3.0 * sigma))
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    xx, yy = np.meshgrid(ax, ax)
    w = np.exp(-(xx * xx + yy * yy) / (2.0 * sigma * sigma))
    w /= w.sum()
    return GaussianKernel(sigma=float(sigma), radius=radius, weights=w)


def convolve_raw(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2D convolution with edge replication, float64 output.

    Accumulates kernel taps in row-major order so the result is bit-identical
    to a scalar nested-loop evaluation of the convolution sum.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise InvalidParameterError("kernel must be 2D and odd-sized in both dimensions")
    kh, kw = kernel.shape
    cy, cx = kh // 2, kw // 2
    h, w = values.shape
    padded = np.pad(np.asarray(values, dtype=np.float64), ((cy, cy), (cx, cx)), mode="edge")
    out = np.zeros((h, w), dtype=np.float64)
    for u in range(kh):
        for v in range(kw):
            out += kernel[u, v] * padded[kh - 1 - u:kh - 1 - u + h, kw - 1 - v:kw - 1 - v + w]
    return out


def correlate_raw(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2D cross-correlation (unflipped kernel) with edge replication."""
    return convolve_raw(values, np.asarray(kernel, dtype=np.float64)[::-1, ::-1])


def convolve(img: GrayImage, kernel: np.ndarray) -> GrayImage:
    """Convolve an image and materialize the clamped 8-bit result."""
    return materialize(convolve_raw(img.floats(), kernel))


# ---------------------------------------------------------------------------
# Image file I/O: binary PGM (P5) and 8-bit grayscale PNG.
# ---------------------------------------------------------------------------

def _parse_pgm(data: bytes) -> np.ndarray:
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            if data[pos:pos + 1].isspace():
                pos += 1
            elif data[pos:pos + 1] == b"#":
                while pos < len(data) and data[pos] not in (10, 13):
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        return data[start:pos]

    if token() != b"P5":
        raise InvalidInputError("not a binary PGM (P5) file")
    try:
        width, height, maxval = int(token()), int(token()), int(token())
    except ValueError as exc:
        raise InvalidInputError("malformed PGM header") from exc
    if maxval != 255:
        raise InvalidInputError(f"unsupported PGM maxval {maxval}; need 8-bit data")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise InvalidInputError("truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def load_image(path) -> GrayImage:
    """Read an 8-bit grayscale image from a PGM (P5) or PNG file."""
    with open(path, "rb") as fh:
        head = fh.read(2)
        fh.seek(0)
        data = fh.read()
    if head == b"P5":
        return GrayImage(_parse_pgm(data))
    from PIL import Image as PILImage

    import io

    try:
        with PILImage.open(io.BytesIO(data)) as im:
            if im.mode != "L":
                raise InvalidInputError(f"{path}: expected 8-bit grayscale, got mode {im.mode}")
            return GrayImage(np.asarray(im, dtype=np.uint8))
    except InvalidInputError:
        raise
    except Exception as exc:
        raise InvalidInputError(f"{path}: cannot decode image ({exc})") from exc


def save_pgm(image, path) -> None:
    """Write a GrayImage, BinaryImage, or uint8 array as binary PGM."""
    if isinstance(image, GrayImage):
        arr = image.pixels
    elif isinstance(image, BinaryImage):
        arr = image.bits * np.uint8(255)
    else:
        arr = np.asarray(image, dtype=np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())
