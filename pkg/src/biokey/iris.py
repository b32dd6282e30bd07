"""Iris localization, noise masking, rubber-sheet unwrapping and texture coding.

Boundary search runs Canny edge detection followed by a circular Hough
transform (full search for the pupil, a window around the pupil center for
the iris). Eyelids are cut off with a linear Hough line, eyelashes and
specular reflections by intensity thresholds. The annulus is unwrapped onto
a fixed polar grid and each radial row is filtered with a 1D log-Gabor
bandpass, yielding one complex coefficient per grid cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError, InvalidParameterError, LocalizationError
from .fingerprint import sobel_gradients
from .image import GrayImage, convolve_raw, gaussian_kernel

EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class EdgeMap:
    bits: np.ndarray  # uint8 {0,1}, same shape as the source image

    def __post_init__(self):
        object.__setattr__(self, "bits", _freeze(np.asarray(self.bits, dtype=np.uint8)))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class Circle:
    cx: int
    cy: int
    r: int

    def __post_init__(self):
        if self.r <= 0:
            raise InvalidInputError("circle radius must be > 0")


@dataclass(frozen=True)
class IrisBoundaries:
    pupil: Circle
    iris: Circle
    noise_mask: np.ndarray  # bool grid marking eyelid/eyelash/reflection pixels

    def __post_init__(self):
        if self.pupil.r >= self.iris.r:
            raise InvalidInputError("pupil radius must be smaller than iris radius")
        d = math.hypot(self.pupil.cx - self.iris.cx, self.pupil.cy - self.iris.cy)
        if d >= self.iris.r:
            raise InvalidInputError("pupil center must lie inside the iris circle")
        object.__setattr__(self, "noise_mask", _freeze(np.asarray(self.noise_mask, dtype=bool)))


@dataclass(frozen=True)
class NormalizedIris:
    values: np.ndarray     # float64 intensities, radial_res x angular_res
    mask_bits: np.ndarray  # bool, True where the cell is noise/occluded

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        m = np.asarray(self.mask_bits, dtype=bool)
        if v.shape != m.shape or v.ndim != 2:
            raise InvalidInputError("normalized grid and mask must share a 2D shape")
        object.__setattr__(self, "values", _freeze(v))
        object.__setattr__(self, "mask_bits", _freeze(m))

    @property
    def radial_res(self) -> int:
        return self.values.shape[0]

    @property
    def angular_res(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LogGaborParams:
    f0: float
    sigma_ratio: float  # sigma / f0

    def __post_init__(self):
        if self.f0 <= 0:
            raise InvalidParameterError("log-gabor centre frequency must be > 0")
        if not 0.0 < self.sigma_ratio < 1.0:
            raise InvalidParameterError("log-gabor sigma ratio must lie in (0, 1)")


@dataclass(frozen=True)
class IrisTexture:
    coeffs: np.ndarray  # complex128, row-major over the normalized grid

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _freeze(np.asarray(self.coeffs, dtype=np.complex128)))

    def __len__(self) -> int:
        return len(self.coeffs)


# ---------------------------------------------------------------------------
# Canny edge detection
# ---------------------------------------------------------------------------

def canny_edges(img: GrayImage, low_t: float, high_t: float, sigma: float = 2.0) -> EdgeMap:
    """Canny: smooth, gradient, non-maximum suppression, hysteresis.

    Weak edges (low_t <= magnitude < high_t) survive only in 8-connected
    components that contain a strong edge (magnitude >= high_t).
    """
    if not 0 <= low_t < high_t:
        raise InvalidParameterError("need 0 <= low threshold < high threshold")
    smoothed = convolve_raw(img.floats(), gaussian_kernel(sigma).weights)
    gx, gy = sobel_gradients(smoothed)
    mag = np.hypot(gx, gy)
    if not mag.any():
        return EdgeMap(np.zeros_like(img.pixels))

    # Quantize gradient direction to 4 sectors and keep local ridge maxima.
    angle = np.mod(np.arctan2(gy, gx), math.pi)
    sector = np.zeros(mag.shape, dtype=np.uint8)
    sector[(angle >= math.pi / 8) & (angle < 3 * math.pi / 8)] = 1   # 45 deg
    sector[(angle >= 3 * math.pi / 8) & (angle < 5 * math.pi / 8)] = 2  # vertical gradient
    sector[(angle >= 5 * math.pi / 8) & (angle < 7 * math.pi / 8)] = 3  # 135 deg
    p = np.pad(mag, 1, mode="constant")
    h, w = mag.shape
    east, west = p[1:h + 1, 2:], p[1:h + 1, :w]
    north, south = p[:h, 1:w + 1], p[2:, 1:w + 1]
    ne, sw = p[:h, 2:], p[2:, :w]
    nw, se = p[:h, :w], p[2:, 2:]
    nms = np.where(
        sector == 0, (mag >= east) & (mag >= west),
        np.where(sector == 1, (mag >= ne) & (mag >= sw),
                 np.where(sector == 2, (mag >= north) & (mag >= south),
                          (mag >= nw) & (mag >= se))))
    thinned = np.where(nms, mag, 0.0)

    strong = thinned >= high_t
    candidate = thinned >= low_t
    labels, count = ndimage.label(candidate, structure=EIGHT_CONNECTED)
    if count == 0:
        return EdgeMap(np.zeros_like(img.pixels))
    keep = np.zeros(count + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return EdgeMap(keep[labels].astype(np.uint8))


def canny_auto(img: GrayImage, sigma: float = 2.0, high_percentile: float = 70.0,
               low_ratio: float = 0.4) -> EdgeMap:
    """Canny with thresholds taken from the gradient-magnitude distribution."""
    smoothed = convolve_raw(img.floats(), gaussian_kernel(sigma).weights)
    gx, gy = sobel_gradients(smoothed)
    mag = np.hypot(gx, gy)
    nonzero = mag[mag > 1e-9]  # ignore float crumbs from flat regions
    if nonzero.size == 0:
        return EdgeMap(np.zeros_like(img.pixels))
    high = float(np.percentile(nonzero, high_percentile))
    return canny_edges(img, low_ratio * high, high, sigma)


# ---------------------------------------------------------------------------
# Circular Hough transform
# ---------------------------------------------------------------------------

_OFFSET_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _circle_offsets(r: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer (dy, dx) whose rounded distance from the origin equals r."""
    cached = _OFFSET_CACHE.get(r)
    if cached is None:
        ax = np.arange(-r, r + 1)
        dx, dy = np.meshgrid(ax, ax)
        on = np.round(np.hypot(dx, dy)).astype(int) == r
        cached = _OFFSET_CACHE[r] = (dy[on], dx[on])
    return cached


def _hough_circle_full(edges: EdgeMap, r_min: int, r_max: int) -> tuple[Circle, int]:
    if r_min >= r_max or r_min < 1:
        raise InvalidParameterError("need 1 <= r_min < r_max")
    ys, xs = np.nonzero(edges.bits)
    if ys.size == 0:
        raise LocalizationError("no circle: edge map is empty")
    h, w = edges.bits.shape
    # Accumulate on a plane padded by r_max so center votes never need bounds
    # checks; the in-image region is cropped out afterwards.
    pw = w + 2 * r_max
    base = ((ys + r_max) * pw + (xs + r_max)).astype(np.int64)[:, None]
    radii = np.arange(r_min, r_max + 1)
    acc = np.empty((radii.size, h, w), dtype=np.int64)
    for ri, r in enumerate(radii):
        dy, dx = _circle_offsets(int(r))
        flat = base - (dy.astype(np.int64) * pw + dx)[None, :]
        plane = np.bincount(flat.ravel(), minlength=pw * (h + 2 * r_max))
        acc[ri] = plane.reshape(h + 2 * r_max, pw)[r_max:r_max + h, r_max:r_max + w]
    best = int(acc.max())
    if best == 0:
        raise LocalizationError("no circle: no votes cast in range")
    ri, cy, cx = np.argwhere(acc == best)[0]  # argwhere is sorted: smallest r, cy, cx first
    return Circle(cx=int(cx), cy=int(cy), r=int(radii[ri])), best


def hough_circle(edges: EdgeMap, r_min: int, r_max: int) -> Circle:
    """Global vote maximum over integer (cx, cy, r) with centers inside the image.

    Every edge pixel votes for all circles through it with radius in
    [r_min, r_max]. Ties resolve to the smallest radius, then smallest
    (cy, cx).
    """
    return _hough_circle_full(edges, r_min, r_max)[0]


def _hough_circle_near(edges: EdgeMap, r_min: int, r_max: int,
                       cy0: int, cx0: int, window: int) -> tuple[Circle, int]:
    """Hough vote restricted to centers within a square window around (cy0, cx0)."""
    ys, xs = np.nonzero(edges.bits)
    if ys.size == 0:
        raise LocalizationError("no circle: edge map is empty")
    h, w = edges.bits.shape
    y_lo, y_hi = max(0, cy0 - window), min(h - 1, cy0 + window)
    x_lo, x_hi = max(0, cx0 - window), min(w - 1, cx0 + window)
    nr = r_max - r_min + 1
    best = (0, 0, 0, 0)  # votes (negated compare), r, cy, cx
    found = False
    for cy in range(y_lo, y_hi + 1):
        dy2 = (ys - cy).astype(np.float64) ** 2
        for cx in range(x_lo, x_hi + 1):
            d = np.round(np.sqrt(dy2 + (xs - cx) ** 2)).astype(int)
            in_range = (d >= r_min) & (d <= r_max)
            if not in_range.any():
                continue
            votes = np.bincount(d[in_range] - r_min, minlength=nr)
            r_best = int(np.argmax(votes))
            v = int(votes[r_best])
            key = (-v, r_min + r_best, cy, cx)
            if not found or key < best:
                best = key
                found = True
    if not found or best[0] == 0:
        raise LocalizationError("no circle found near the given center")
    return Circle(cx=best[3], cy=best[2], r=best[1]), -best[0]


def _support(circle: Circle, votes: int) -> float:
    """Fraction of the circle's rasterized perimeter backed by votes."""
    return votes / len(_circle_offsets(circle.r)[0])


def locate_boundaries(img: GrayImage, pupil_range: tuple[int, int],
                      iris_range: tuple[int, int], *, edges: EdgeMap | None = None,
                      canny_sigma: float = 2.0, high_percentile: float = 70.0,
                      low_ratio: float = 0.4, center_window: int = 15,
                      min_support: float = 0.25) -> IrisBoundaries:
    """Find the pupil circle, then the iris circle near the pupil center.

    A circle only counts as found when its votes cover at least min_support
    of its perimeter; otherwise, or when the recovered pair violates
    pupil-inside-iris, a LocalizationError is raised.
    """
    if edges is None:
        edges = canny_auto(img, sigma=canny_sigma, high_percentile=high_percentile,
                           low_ratio=low_ratio)
    pupil, pupil_votes = _hough_circle_full(edges, pupil_range[0], pupil_range[1])
    if _support(pupil, pupil_votes) < min_support:
        raise LocalizationError(
            f"no pupil circle in radius range {pupil_range}: "
            f"best candidate covers only {_support(pupil, pupil_votes):.0%} of a perimeter")
    iris_c, iris_votes = _hough_circle_near(edges, iris_range[0], iris_range[1],
                                            pupil.cy, pupil.cx, center_window)
    if _support(iris_c, iris_votes) < min_support:
        raise LocalizationError(
            f"no iris circle in radius range {iris_range} near the pupil center")
    try:
        return IrisBoundaries(pupil=pupil, iris=iris_c,
                              noise_mask=np.zeros(img.pixels.shape, dtype=bool))
    except InvalidInputError as exc:
        raise LocalizationError(f"inconsistent boundaries: {exc}") from exc


# ---------------------------------------------------------------------------
# Eyelid / eyelash / reflection masking
# ---------------------------------------------------------------------------

def _hough_line(ys: np.ndarray, xs: np.ndarray, diag: int) -> tuple[int, float, int]:
    """Best (votes, angle, rho) line through the given points; 1-degree angle bins."""
    phis = np.deg2rad(np.arange(180, dtype=np.float64))
    rho = np.round(xs[:, None] * np.cos(phis)[None, :]
                   + ys[:, None] * np.sin(phis)[None, :]).astype(int) + diag
    best_votes, best_phi, best_rho = 0, 0.0, 0
    for k in range(180):
        votes = np.bincount(rho[:, k], minlength=2 * diag + 1)
        v = int(votes.max())
        if v > best_votes:
            best_votes, best_phi, best_rho = v, float(phis[k]), int(np.argmax(votes) - diag)
    return best_votes, best_phi, best_rho


def _line_circle_cut(phi: float, rho: float, circle: Circle) -> list[tuple[float, float]]:
    """Intersections of the line x cos(phi) + y sin(phi) = rho with a circle."""
    n = np.array([math.cos(phi), math.sin(phi)])
    c = np.array([circle.cx, circle.cy], dtype=np.float64)
    dist = rho - float(n @ c)
    if abs(dist) > circle.r:
        return []
    foot = c + dist * n
    t = math.sqrt(max(circle.r ** 2 - dist * dist, 0.0))
    d = np.array([-n[1], n[0]])
    return [tuple(foot + t * d), tuple(foot - t * d)]


def mask_noise(img: GrayImage, bounds: IrisBoundaries, eyelash_t: float, *,
               edges: EdgeMap | None = None, reflection_t: float = 250.0,
               min_line_frac: float = 0.3, canny_sigma: float = 2.0,
               high_percentile: float = 70.0, low_ratio: float = 0.4) -> IrisBoundaries:
    """Mark eyelid, eyelash and reflection pixels in the noise mask.

    Eyelids: a linear Hough fit in the upper/lower iris region, then a
    horizontal cut through the line/iris-circle intersection nearest the
    pupil; everything beyond the cut is masked. Eyelashes are annulus pixels
    strictly darker than eyelash_t, reflections those at or above
    reflection_t. Finding no eyelid line is not an error.
    """
    if edges is None:
        edges = canny_auto(img, sigma=canny_sigma, high_percentile=high_percentile,
                           low_ratio=low_ratio)
    h, w = img.pixels.shape
    mask = bounds.noise_mask.copy()
    iris_c, pupil = bounds.iris, bounds.pupil
    diag = int(math.ceil(math.hypot(h, w)))
    min_votes = max(3, int(math.ceil(min_line_frac * 2 * iris_c.r)))
    x_lo, x_hi = max(0, iris_c.cx - iris_c.r), min(w - 1, iris_c.cx + iris_c.r)
    yy = np.arange(h)[:, None]

    regions = (
        (max(0, iris_c.cy - iris_c.r), max(0, pupil.cy - pupil.r), True),       # upper
        (min(h - 1, pupil.cy + pupil.r), min(h - 1, iris_c.cy + iris_c.r), False),  # lower
    )
    for y_lo, y_hi, is_upper in regions:
        if y_hi <= y_lo:
            continue
        region = np.zeros((h, w), dtype=bool)
        region[y_lo:y_hi + 1, x_lo:x_hi + 1] = True
        ys, xs = np.nonzero(edges.bits.astype(bool) & region)
        if ys.size == 0:
            continue
        votes, phi, rho = _hough_line(ys, xs, diag)
        if votes < min_votes:
            continue
        cuts = _line_circle_cut(phi, rho, iris_c)
        if not cuts:
            continue
        cut = min(cuts, key=lambda p: math.hypot(p[0] - pupil.cx, p[1] - pupil.cy))
        cut_y = cut[1]
        if is_upper:
            mask |= (yy <= cut_y)
        else:
            mask |= (yy >= cut_y)

    xg, yg = np.meshgrid(np.arange(w), np.arange(h))
    d_pupil = np.hypot(xg - pupil.cx, yg - pupil.cy)
    d_iris = np.hypot(xg - iris_c.cx, yg - iris_c.cy)
    annulus = (d_pupil > pupil.r) & (d_iris <= iris_c.r)
    mask |= annulus & (img.pixels < eyelash_t)
    mask |= annulus & (img.pixels >= reflection_t)
    mask &= d_iris <= iris_c.r  # eyelid cuts only matter inside the iris disc
    return IrisBoundaries(pupil=pupil, iris=iris_c, noise_mask=mask)


# ---------------------------------------------------------------------------
# Rubber-sheet normalization and log-Gabor texture
# ---------------------------------------------------------------------------

def normalize(img: GrayImage, bounds: IrisBoundaries,
              radial_res: int, angular_res: int) -> NormalizedIris:
    """Unwrap the iris annulus onto a radial_res x angular_res polar grid.

    Point (r, theta) interpolates (1-r) * pupil boundary + r * iris boundary,
    theta over [0, 2pi) and r over [0, 1] inclusive. Cells sampling outside
    the image or touching the noise mask are flagged, not errors.
    """
    if radial_res < 2 or angular_res < 2:
        raise InvalidParameterError("radial and angular resolutions must be >= 2")
    thetas = 2.0 * math.pi * np.arange(angular_res) / angular_res
    rs = np.arange(radial_res, dtype=np.float64) / (radial_res - 1)
    px = bounds.pupil.cx + bounds.pupil.r * np.cos(thetas)
    py = bounds.pupil.cy + bounds.pupil.r * np.sin(thetas)
    ix = bounds.iris.cx + bounds.iris.r * np.cos(thetas)
    iy = bounds.iris.cy + bounds.iris.r * np.sin(thetas)
    x = (1.0 - rs)[:, None] * px[None, :] + rs[:, None] * ix[None, :]
    y = (1.0 - rs)[:, None] * py[None, :] + rs[:, None] * iy[None, :]

    h, w = img.pixels.shape
    inside = (x >= 0) & (x <= w - 1) & (y >= 0) & (y <= h - 1)
    x0 = np.clip(np.floor(x).astype(int), 0, w - 2)
    y0 = np.clip(np.floor(y).astype(int), 0, h - 2)
    fx = np.clip(x - x0, 0.0, 1.0)
    fy = np.clip(y - y0, 0.0, 1.0)
    p = img.pixels.astype(np.float64)
    values = ((1 - fy) * ((1 - fx) * p[y0, x0] + fx * p[y0, x0 + 1])
              + fy * ((1 - fx) * p[y0 + 1, x0] + fx * p[y0 + 1, x0 + 1]))
    noisy = (bounds.noise_mask[y0, x0] | bounds.noise_mask[y0, x0 + 1]
             | bounds.noise_mask[y0 + 1, x0] | bounds.noise_mask[y0 + 1, x0 + 1])
    mask = ~inside | noisy
    values = np.where(inside, values, 0.0)
    return NormalizedIris(values=values, mask_bits=mask)


def log_gabor_response(freqs: np.ndarray, params: LogGaborParams) -> np.ndarray:
    """G(f) = exp(-(log(f/f0))^2 / (2 log(sigma/f0)^2)), with G(0) = 0."""
    f = np.asarray(freqs, dtype=np.float64)
    out = np.zeros(f.shape, dtype=np.float64)
    pos = f > 0
    denom = 2.0 * math.log(params.sigma_ratio) ** 2
    out[pos] = np.exp(-(np.log(f[pos] / params.f0) ** 2) / denom)
    return out


def log_gabor_features(norm: NormalizedIris, params: LogGaborParams) -> IrisTexture:
    """Filter each radial row with the 1D log-Gabor and concatenate row-major.

    The filter acts on non-negative FFT bins only (negative bins and DC are
    zeroed), so each cell yields a complex coefficient. Masked cells are
    forced to 0+0i.
    """
    n = norm.angular_res
    bins = np.fft.fftfreq(n)
    response = log_gabor_response(np.abs(bins), params)
    response[bins < 0] = 0.0
    spectra = np.fft.fft(norm.values, axis=1)
    coeffs = np.fft.ifft(spectra * response[None, :], axis=1)
    coeffs = np.where(norm.mask_bits, 0.0 + 0.0j, coeffs)
    return IrisTexture(coeffs.reshape(-1))
