"""Fingerprint minutiae extraction.

Stages: block segmentation on gradient spread, squared-gradient orientation
field, oriented Gabor ridge enhancement, global-threshold binarization,
two-subiteration morphological thinning, and crossing-number minutiae
detection on the resulting one-pixel skeleton.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .image import BinaryImage, GrayImage, convolve_raw, correlate_raw, gaussian_kernel, materialize

BLOCK_SIZE = 16

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SegmentationMask:
    """Per-block foreground flags for a specific image size."""

    width: int
    height: int
    blocks: np.ndarray  # bool grid, ceil(h/16) x ceil(w/16)
    threshold: float
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        object.__setattr__(self, "blocks", _freeze(np.asarray(self.blocks, dtype=bool)))

    def matches(self, img: GrayImage) -> bool:
        return self.width == img.width and self.height == img.height

    def pixel_mask(self) -> np.ndarray:
        """Expand block flags to a per-pixel boolean grid."""
        per_pixel = np.repeat(np.repeat(self.blocks, self.block_size, axis=0),
                              self.block_size, axis=1)
        return per_pixel[:self.height, :self.width]


@dataclass(frozen=True)
class OrientationField:
    """Dominant ridge angle per block, angles in [0, pi)."""

    block_size: int
    angles: np.ndarray    # float64 grid of theta_B, radians
    validity: np.ndarray  # bool grid, False where orientation undefined

    def __post_init__(self):
        object.__setattr__(self, "angles", _freeze(np.asarray(self.angles, dtype=np.float64)))
        object.__setattr__(self, "validity", _freeze(np.asarray(self.validity, dtype=bool)))


@dataclass(frozen=True)
class GaborParams:
    theta: float
    f0: float
    sigma_x: float
    sigma_y: float

    def __post_init__(self):
        if self.f0 <= 0:
            raise InvalidParameterError("gabor ridge frequency must be > 0")
        if self.sigma_x <= 0 or self.sigma_y <= 0:
            raise InvalidParameterError("gabor envelope sigmas must be > 0")


RIDGE_ENDING = "ridge-ending"
BIFURCATION = "bifurcation"


@dataclass(frozen=True)
class Minutia:
    x: int
    y: int
    kind: str


@dataclass(frozen=True)
class MinutiaeSet:
    minutiae: tuple[Minutia, ...]

    def __len__(self) -> int:
        return len(self.minutiae)


def _block_ranges(extent: int, block: int):
    for b0 in range(0, extent, block):
        yield b0, min(b0 + block, extent)


def central_gradients(pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradients with edge replication: (I[.+1] - I[.-1]) / 2."""
    p = np.pad(pixels.astype(np.float64), 1, mode="edge")
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) / 2.0
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) / 2.0
    return gx, gy


def sobel_gradients(pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel gradients with edge replication."""
    p = pixels.astype(np.float64)
    return correlate_raw(p, SOBEL_X), correlate_raw(p, SOBEL_Y)


def segment(img: GrayImage, threshold: float) -> SegmentationMask:
    """Mark 16x16 blocks whose summed gradient spread exceeds the threshold.

    Per block: stddev(gx) + stddev(gy) over central-difference gradients;
    foreground iff the sum is strictly greater than the threshold.
    """
    if img.height < BLOCK_SIZE or img.width < BLOCK_SIZE:
        raise InvalidInputError("segmentation needs at least one 16x16 block")
    gx, gy = central_gradients(img.pixels)
    by = math.ceil(img.height / BLOCK_SIZE)
    bx = math.ceil(img.width / BLOCK_SIZE)
    blocks = np.zeros((by, bx), dtype=bool)
    for bi, (y0, y1) in enumerate(_block_ranges(img.height, BLOCK_SIZE)):
        for bj, (x0, x1) in enumerate(_block_ranges(img.width, BLOCK_SIZE)):
            spread = float(np.std(gx[y0:y1, x0:x1]) + np.std(gy[y0:y1, x0:x1]))
            blocks[bi, bj] = spread > threshold
    return SegmentationMask(width=img.width, height=img.height, blocks=blocks,
                            threshold=float(threshold))


def estimate_orientation(img: GrayImage, mask: SegmentationMask) -> OrientationField:
    """Squared-gradient block orientation.

    theta_B = atan2(sum 2 gx gy, sum gx^2 - gy^2) / 2 + pi/2, reduced into
    [0, pi). Background blocks and blocks with no gradient signal are invalid.
    """
    if not mask.matches(img):
        raise InvalidInputError("segmentation mask does not match image dimensions")
    gx, gy = sobel_gradients(img.pixels)
    by, bx = mask.blocks.shape
    angles = np.zeros((by, bx), dtype=np.float64)
    validity = np.zeros((by, bx), dtype=bool)
    for bi, (y0, y1) in enumerate(_block_ranges(img.height, mask.block_size)):
        for bj, (x0, x1) in enumerate(_block_ranges(img.width, mask.block_size)):
            if not mask.blocks[bi, bj]:
                continue
            bgx = gx[y0:y1, x0:x1]
            bgy = gy[y0:y1, x0:x1]
            num = float(np.sum(2.0 * bgx * bgy))
            den = float(np.sum(bgx * bgx - bgy * bgy))
            if num == 0.0 and den == 0.0:
                continue
            theta = 0.5 * math.atan2(num, den) + math.pi / 2.0
            angles[bi, bj] = theta % math.pi
            validity[bi, bj] = True
    return OrientationField(block_size=mask.block_size, angles=angles, validity=validity)


def gabor_kernel(params: GaborParams) -> np.ndarray:
    """Oriented Gabor tap grid.

    x_t =  x sin(theta) + y cos(theta)
    y_t = -x cos(theta) + y sin(theta)
    G   = exp(-(x_t^2/sx^2 + y_t^2/sy^2)/2) * cos(2 pi f0 x_t)

    Rows index -y (mathematical y axis points up), radius = ceil(3 max sigma).
    """
    radius = int(np.ceil(3.0 * max(params.sigma_x, params.sigma_y)))
    cols = np.arange(-radius, radius + 1, dtype=np.float64)
    x = cols[np.newaxis, :]
    y = -cols[:, np.newaxis]  # row offset downward = -y
    st, ct = math.sin(params.theta), math.cos(params.theta)
    xt = x * st + y * ct
    yt = -x * ct + y * st
    envelope = np.exp(-0.5 * (xt * xt / params.sigma_x ** 2 + yt * yt / params.sigma_y ** 2))
    return envelope * np.cos(2.0 * math.pi * params.f0 * xt)


def gabor_enhance(img: GrayImage, field: OrientationField, f0: float,
                  sigma_x: float, sigma_y: float, smooth_sigma: float = 1.0) -> GrayImage:
    """Ridge enhancement: Gaussian pre-smoothing, then per-block Gabor filtering.

    Each valid block is filtered with the kernel built from its own angle;
    blocks without a defined orientation keep their input pixels.
    """
    by, bx = field.validity.shape
    if by != math.ceil(img.height / field.block_size) or bx != math.ceil(img.width / field.block_size):
        raise InvalidInputError("orientation field does not match image dimensions")
    smoothed = convolve_raw(img.floats(), gaussian_kernel(smooth_sigma).weights)
    radius = int(np.ceil(3.0 * max(sigma_x, sigma_y)))
    padded = np.pad(smoothed, radius, mode="edge")
    out = img.floats()
    kernels: dict[float, np.ndarray] = {}
    k = 2 * radius + 1
    for bi, (y0, y1) in enumerate(_block_ranges(img.height, field.block_size)):
        for bj, (x0, x1) in enumerate(_block_ranges(img.width, field.block_size)):
            if not field.validity[bi, bj]:
                continue
            theta = float(field.angles[bi, bj])
            kern = kernels.get(theta)
            if kern is None:
                kern = gabor_kernel(GaborParams(theta, f0, sigma_x, sigma_y))
                kernels[theta] = kern
            region = padded[y0:y1 + 2 * radius, x0:x1 + 2 * radius]
            windows = np.lib.stride_tricks.sliding_window_view(region, (k, k))
            out[y0:y1, x0:x1] = np.einsum("yxuv,uv->yx", windows, kern)
    return materialize(out)


def binarize(img: GrayImage, mask: SegmentationMask) -> BinaryImage:
    """Threshold at the mean intensity over foreground blocks; background is 0."""
    if not mask.matches(img):
        raise InvalidInputError("segmentation mask does not match image dimensions")
    fg = mask.pixel_mask()
    if not fg.any():
        return BinaryImage(np.zeros_like(img.pixels))
    threshold = float(np.mean(img.pixels[fg]))
    bits = ((img.pixels > threshold) & fg).astype(np.uint8)
    return BinaryImage(bits)


def _neighbors(bits: np.ndarray) -> list[np.ndarray]:
    """x1..x8: east neighbor first, counter-clockwise (math axes, rows grow down)."""
    p = np.pad(bits, 1, mode="constant")
    h, w = bits.shape
    east = p[1:h + 1, 2:w + 2]
    northeast = p[0:h, 2:w + 2]
    north = p[0:h, 1:w + 1]
    northwest = p[0:h, 0:w]
    west = p[1:h + 1, 0:w]
    southwest = p[2:h + 2, 0:w]
    south = p[2:h + 2, 1:w + 1]
    southeast = p[2:h + 2, 2:w + 2]
    return [east, northeast, north, northwest, west, southwest, south, southeast]


def _thin_subiteration(bits: np.ndarray, second: bool) -> np.ndarray:
    """Delete every pixel satisfying the subiteration's conditions at once.

    G1: X_H(p) = 1              (exactly one 0->1 transition pattern)
    G2: 2 <= min(n1, n2) <= 3   (neighborhood occupancy)
    G3: ((x2|x3|~x8) & x1) = 0  (first subiteration)
    G3': ((x6|x7|~x4) & x5) = 0 (second subiteration)
    """
    x1, x2, x3, x4, x5, x6, x7, x8 = (n.astype(bool) for n in _neighbors(bits))
    b1 = ~x1 & (x2 | x3)
    b2 = ~x3 & (x4 | x5)
    b3 = ~x5 & (x6 | x7)
    b4 = ~x7 & (x8 | x1)
    xh = (b1.astype(np.uint8) + b2.astype(np.uint8) + b3.astype(np.uint8) + b4.astype(np.uint8))
    g1 = xh == 1
    n1 = ((x1 | x2).astype(np.uint8) + (x3 | x4).astype(np.uint8)
          + (x5 | x6).astype(np.uint8) + (x7 | x8).astype(np.uint8))
    n2 = ((x2 | x3).astype(np.uint8) + (x4 | x5).astype(np.uint8)
          + (x6 | x7).astype(np.uint8) + (x8 | x1).astype(np.uint8))
    m = np.minimum(n1, n2)
    g2 = (m >= 2) & (m <= 3)
    if second:
        g3 = ~((x6 | x7 | ~x4) & x5)
    else:
        g3 = ~((x2 | x3 | ~x8) & x1)
    delete = bits.astype(bool) & g1 & g2 & g3
    return (bits.astype(bool) & ~delete).astype(np.uint8)


def thin_pass(bits: np.ndarray) -> np.ndarray:
    """One full pass: the G3 subiteration, then the G3' subiteration."""
    step = _thin_subiteration(bits, second=False)
    return _thin_subiteration(step, second=True)


def thin(img: BinaryImage) -> BinaryImage:
    """Two-subiteration thinning iterated to a fixed point (one-pixel skeleton)."""
    bits = img.bits.copy()
    while True:
        after = thin_pass(bits)
        if np.array_equal(after, bits):
            return BinaryImage(after)
        bits = after


def crossing_numbers(bits: np.ndarray) -> np.ndarray:
    """CN(p) = half the sum of |x_i - x_{i+1}| around the 8-neighborhood (cyclic)."""
    nb = _neighbors(bits.astype(np.uint8))
    total = np.zeros(bits.shape, dtype=np.int16)
    for i in range(8):
        total += np.abs(nb[i].astype(np.int16) - nb[(i + 1) % 8].astype(np.int16))
    return total // 2


def extract_minutiae(thinned: BinaryImage, mask: SegmentationMask) -> MinutiaeSet:
    """Crossing-number minutiae on a thinned skeleton.

    CN=1 ridge ending, CN=3 bifurcation. Points whose block touches the
    foreground/background boundary (image border counts as background) are
    discarded. Output is in row-major scan order.
    """
    if thinned.height != mask.height or thinned.width != mask.width:
        raise InvalidInputError("mask does not match thinned image dimensions")
    if not np.array_equal(thin_pass(thinned.bits), thinned.bits):
        raise InvalidInputError("input is not a thinned image (thinning would still change it)")
    cn = crossing_numbers(thinned.bits)
    padded_blocks = np.pad(mask.blocks, 1, mode="constant")
    safe = np.ones_like(mask.blocks)
    for dy in range(3):
        for dx in range(3):
            by, bx = mask.blocks.shape
            safe &= padded_blocks[dy:dy + by, dx:dx + bx]
    block = mask.block_size
    per_pixel_safe = np.repeat(np.repeat(safe, block, axis=0), block, axis=1)
    per_pixel_safe = per_pixel_safe[:mask.height, :mask.width]
    candidates = (thinned.bits == 1) & per_pixel_safe & ((cn == 1) | (cn == 3))
    found = []
    for y, x in np.argwhere(candidates):
        kind = RIDGE_ENDING if cn[y, x] == 1 else BIFURCATION
        found.append(Minutia(x=int(x), y=int(y), kind=kind))
    return MinutiaeSet(tuple(found))
