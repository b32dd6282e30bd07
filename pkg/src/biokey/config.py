"""Pipeline configuration: every tunable parameter with its default.

Configs load from a flat ``key = value`` text file ('#' starts a comment).
Unknown keys and out-of-range values are rejected. serialize() emits the
canonical form: every field in declaration order, one per line.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import InvalidParameterError


@dataclass
class PipelineConfig:
    # fingerprint
    seg_threshold_factor: float = 0.1   # segmentation cutoff = factor * global intensity stddev
    gabor_f0: float = 1.0 / 9.0         # ridge frequency, cycles/pixel
    gabor_sigma_x: float = 4.0
    gabor_sigma_y: float = 4.0
    smooth_sigma: float = 1.0           # Gaussian low-pass before Gabor filtering
    # iris
    canny_sigma: float = 2.0
    canny_high_percentile: float = 70.0
    canny_low_ratio: float = 0.4
    pupil_r_min: int = 40
    pupil_r_max: int = 80
    iris_r_min: int = 120
    iris_r_max: int = 200
    iris_center_window: int = 15        # iris center search half-width around the pupil
    hough_min_support: float = 0.25     # min perimeter fraction behind an accepted circle
    eyelash_threshold: int = 60
    reflection_threshold: int = 250
    eyelid_min_frac: float = 0.3        # eyelid line acceptance, fraction of iris diameter
    radial_res: int = 20
    angular_res: int = 240
    log_gabor_f0: float = 1.0 / 18.0    # cycles/sample
    log_gabor_sigma_ratio: float = 0.5
    # fusion
    seed: int = 42
    big_m: int = 1_000_007
    quant_scale: int = 10_000
    bit_width: int = 16
    # keygen
    key_bits: int = 256

    def validate(self) -> "PipelineConfig":
        checks = [
            (self.seg_threshold_factor >= 0, "seg_threshold_factor must be >= 0"),
            (self.gabor_f0 > 0, "gabor_f0 must be > 0"),
            (self.gabor_sigma_x > 0, "gabor_sigma_x must be > 0"),
            (self.gabor_sigma_y > 0, "gabor_sigma_y must be > 0"),
            (self.smooth_sigma > 0, "smooth_sigma must be > 0"),
            (self.canny_sigma > 0, "canny_sigma must be > 0"),
            (0 < self.canny_high_percentile < 100, "canny_high_percentile must be in (0, 100)"),
            (0 < self.canny_low_ratio < 1, "canny_low_ratio must be in (0, 1)"),
            (1 <= self.pupil_r_min < self.pupil_r_max, "need 1 <= pupil_r_min < pupil_r_max"),
            (1 <= self.iris_r_min < self.iris_r_max, "need 1 <= iris_r_min < iris_r_max"),
            (self.iris_center_window >= 0, "iris_center_window must be >= 0"),
            (0 < self.hough_min_support <= 1, "hough_min_support must be in (0, 1]"),
            (0 <= self.eyelash_threshold <= 255, "eyelash_threshold must be in [0, 255]"),
            (0 <= self.reflection_threshold <= 255, "reflection_threshold must be in [0, 255]"),
            (0 < self.eyelid_min_frac <= 1, "eyelid_min_frac must be in (0, 1]"),
            (self.radial_res >= 2, "radial_res must be >= 2"),
            (self.angular_res >= 2, "angular_res must be >= 2"),
            (self.log_gabor_f0 > 0, "log_gabor_f0 must be > 0"),
            (0 < self.log_gabor_sigma_ratio < 1, "log_gabor_sigma_ratio must be in (0, 1)"),
            (0 <= self.seed < (1 << 64), "seed must be an unsigned 64-bit integer"),
            (self.big_m >= 1, "big_m must be >= 1"),
            (self.quant_scale >= 1, "quant_scale must be >= 1"),
            (1 <= self.bit_width <= 16, "bit_width must be in [1, 16]"),
            (self.key_bits >= 1, "key_bits must be >= 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise InvalidParameterError(message)
        return self


_FIELDS = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def parse_config(text: str) -> PipelineConfig:
    """Parse flat key = value lines into a validated config."""
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"config line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise InvalidParameterError(f"config line {lineno}: unknown key '{key}'")
        try:
            overrides[key] = int(value) if _FIELDS[key] == "int" else float(value)
        except ValueError as exc:
            raise InvalidParameterError(f"config line {lineno}: bad value for '{key}'") from exc
    return PipelineConfig(**overrides).validate()


def load_config(path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(cfg: PipelineConfig) -> str:
    """Canonical rendering: declaration order, repr() for floats."""
    lines = []
    for f in dataclasses.fields(PipelineConfig):
        value = getattr(cfg, f.name)
        lines.append(f"{f.name} = {value!r}")
    return "\n".join(lines) + "\n"
