"""Deterministic synthetic test images: ridge patterns and eye annuli.

Stand-ins for real fingerprint/iris captures; every image is a pure function
of its geometry parameters so repeated generation is byte-identical.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidParameterError
from .image import GrayImage, materialize, save_pgm

TEXTURE_MODES = ("none", "sin", "quadrant", "ramp")


def fingerprint_stripes(width: int, height: int, theta: float, period: float,
                        seam: float = 0.5, amplitude: float = 70.0,
                        mean: float = 128.0) -> GrayImage:
    """Sinusoidal ridge pattern with ridge lines at angle theta.

    seam in (0, 1) breaks every ridge with a half-period phase jump along a
    line perpendicular to the ridges, so endings appear in the interior;
    seam <= 0 or >= 1 disables it.
    """
    if width < 1 or height < 1:
        raise InvalidParameterError("image dimensions must be positive")
    if period <= 1:
        raise InvalidParameterError("stripe period must be > 1 pixel")
    x, y = np.meshgrid(np.arange(width, dtype=np.float64),
                       np.arange(height, dtype=np.float64))
    u = x * math.sin(theta) - y * math.cos(theta)   # across the ridges
    v = x * math.cos(theta) + y * math.sin(theta)   # along the ridges
    phase = 2.0 * math.pi * u / period
    if 0.0 < seam < 1.0:
        corners_v = [wc * math.cos(theta) + hc * math.sin(theta)
                     for wc in (0.0, width - 1.0) for hc in (0.0, height - 1.0)]
        v0 = min(corners_v) + seam * (max(corners_v) - min(corners_v))
        phase = phase + np.where(v >= v0, math.pi, 0.0)
    return materialize(mean + amplitude * np.sin(phase))


def eye_annulus(width: int, height: int, pupil_cx: int, pupil_cy: int, pupil_r: int,
                iris_r: int, iris_cx: int | None = None, iris_cy: int | None = None,
                pupil_level: int = 30, iris_level: int = 120, sclera_level: int = 210,
                texture: str = "none", texture_amp: float = 12.0,
                angular_freq: int = 8, radial_freq: int = 5,
                angular_offset: float = 0.0,
                eyelid_y: int | None = None, eyelid_level: int = 70) -> GrayImage:
    """Synthetic eye: dark pupil disc inside an iris annulus on a bright sclera.

    texture 'sin' modulates the annulus in both angle and radius, 'quadrant'
    paints four angular intensity bands, 'ramp' replaces the whole image with
    the radial ramp 100..200 between the pupil and iris radii (clamped
    outside). eyelid_y, when given, overwrites all rows above it with a flat
    band, like a lid closing from the top.
    """
    if texture not in TEXTURE_MODES:
        raise InvalidParameterError(f"texture must be one of {TEXTURE_MODES}")
    icx = pupil_cx if iris_cx is None else iris_cx
    icy = pupil_cy if iris_cy is None else iris_cy
    if not 0 < pupil_r < iris_r:
        raise InvalidParameterError("need 0 < pupil_r < iris_r")
    if math.hypot(pupil_cx - icx, pupil_cy - icy) >= iris_r:
        raise InvalidParameterError("pupil center must lie inside the iris circle")
    x, y = np.meshgrid(np.arange(width, dtype=np.float64),
                       np.arange(height, dtype=np.float64))
    d_pupil = np.hypot(x - pupil_cx, y - pupil_cy)
    d_iris = np.hypot(x - icx, y - icy)

    if texture == "ramp":
        frac = np.clip((d_pupil - pupil_r) / (iris_r - pupil_r), 0.0, 1.0)
        return materialize(100.0 + 100.0 * frac)

    values = np.full((height, width), float(sclera_level))
    annulus = (d_pupil > pupil_r) & (d_iris <= iris_r)
    values[annulus] = float(iris_level)
    if texture == "sin":
        phi = np.arctan2(y - icy, x - icx) + angular_offset
        rho = np.clip((d_pupil - pupil_r) / (iris_r - pupil_r), 0.0, 1.0)
        wave = np.sin(angular_freq * phi) * np.cos(2.0 * math.pi * radial_freq * rho)
        values[annulus] += texture_amp * wave[annulus]
    elif texture == "quadrant":
        phi = np.mod(np.arctan2(y - icy, x - icx) + angular_offset, 2.0 * math.pi)
        band = np.floor(phi / (math.pi / 2.0)).astype(int) % 4
        values[annulus] += (texture_amp * band)[annulus]
    values[d_pupil <= pupil_r] = float(pupil_level)
    if eyelid_y is not None:
        if not 0 <= eyelid_y < height:
            raise InvalidParameterError("eyelid_y must be a valid row")
        values[:eyelid_y, :] = float(eyelid_level)
    return materialize(values)


def make_fixtures(kind: str, params: dict, out_path) -> str:
    """Render a fixture of the given kind to a PGM file; returns the path."""
    if kind == "fingerprint-stripes":
        img = fingerprint_stripes(**params)
    elif kind == "eye-annulus":
        img = eye_annulus(**params)
    else:
        raise InvalidParameterError(f"unknown fixture kind '{kind}'")
    save_pgm(img, out_path)
    return str(out_path)
