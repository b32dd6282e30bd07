"""End-to-end orchestration: images in, 256-bit key out.

Fingerprint path: histogram equalization, Wiener filtering, segmentation,
orientation estimation, Gabor enhancement, binarization, thinning, minutiae.
Iris path: Canny, circular Hough localization, noise masking, rubber-sheet
normalization, log-Gabor coefficients. The two feature sets are fused and
the key is derived from the fused template.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import fingerprint as fp
from . import iris as ir
from .config import PipelineConfig
from .errors import BiokeyError, StageFailure
from .fusion import FusionState, ShuffleRandomness, build_feature_vectors, fuse
from .image import (GrayImage, WienerParams, histogram_equalize, load_image,
                    save_pgm, wiener_filter)
from .keygen import CryptoKey, Template, distinct, generate_key


@dataclass
class RunReport:
    timings: dict[str, float]
    minutiae_count: int
    coeff_count: int
    distinct_count: int
    key: CryptoKey
    artifacts: list[str] = field(default_factory=list)


class _Stages:
    """Collects per-stage timings and wraps failures with the stage name."""

    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, name, fn, *args, **kwargs):
        start = time.perf_counter()
        try:
            result = fn(*args, **kwargs)
        except BiokeyError as exc:
            raise StageFailure(name, exc) from exc
        self.timings[name] = time.perf_counter() - start
        return result


def extract_fingerprint_features(img: GrayImage, cfg: PipelineConfig,
                                 stages: _Stages | None = None) -> tuple[fp.MinutiaeSet, dict]:
    """Run the full fingerprint chain; returns minutiae and intermediates."""
    stages = stages or _Stages()
    inter: dict = {}
    equalized, inter["hist_mapping"] = stages.run("histogram-equalize",
                                                  histogram_equalize, img)
    inter["equalized"] = equalized
    filtered = stages.run("wiener-filter", wiener_filter, equalized, WienerParams())
    inter["wiener"] = filtered
    threshold = cfg.seg_threshold_factor * float(np.std(filtered.pixels))
    mask = stages.run("segment", fp.segment, filtered, threshold)
    inter["mask"] = mask
    field_ = stages.run("orientation", fp.estimate_orientation, filtered, mask)
    inter["orientation"] = field_
    enhanced = stages.run("gabor-enhance", fp.gabor_enhance, filtered, field_,
                          cfg.gabor_f0, cfg.gabor_sigma_x, cfg.gabor_sigma_y,
                          cfg.smooth_sigma)
    inter["enhanced"] = enhanced
    binary = stages.run("binarize", fp.binarize, enhanced, mask)
    inter["binary"] = binary
    thinned = stages.run("thin", fp.thin, binary)
    inter["thinned"] = thinned
    minutiae = stages.run("extract-minutiae", fp.extract_minutiae, thinned, mask)
    inter["minutiae"] = minutiae
    return minutiae, inter


def extract_iris_features(img: GrayImage, cfg: PipelineConfig,
                          stages: _Stages | None = None) -> tuple[ir.IrisTexture, dict]:
    """Run the full iris chain; returns texture coefficients and intermediates."""
    stages = stages or _Stages()
    inter: dict = {}
    edges = stages.run("canny", ir.canny_auto, img, cfg.canny_sigma,
                       cfg.canny_high_percentile, cfg.canny_low_ratio)
    inter["edges"] = edges
    bounds = stages.run("locate-boundaries", ir.locate_boundaries, img,
                        (cfg.pupil_r_min, cfg.pupil_r_max),
                        (cfg.iris_r_min, cfg.iris_r_max),
                        edges=edges, center_window=cfg.iris_center_window,
                        min_support=cfg.hough_min_support)
    bounds = stages.run("mask-noise", ir.mask_noise, img, bounds,
                        cfg.eyelash_threshold, edges=edges,
                        reflection_t=cfg.reflection_threshold,
                        min_line_frac=cfg.eyelid_min_frac)
    inter["bounds"] = bounds
    norm = stages.run("normalize", ir.normalize, img, bounds,
                      cfg.radial_res, cfg.angular_res)
    inter["normalized"] = norm
    texture = stages.run("log-gabor", ir.log_gabor_features, norm,
                         ir.LogGaborParams(cfg.log_gabor_f0, cfg.log_gabor_sigma_ratio))
    inter["texture"] = texture
    return texture, inter


def fuse_and_derive(minutiae: fp.MinutiaeSet, texture: ir.IrisTexture,
                    cfg: PipelineConfig,
                    stages: _Stages | None = None) -> tuple[FusionState, CryptoKey]:
    stages = stages or _Stages()
    vectors = stages.run("feature-vectors", build_feature_vectors, minutiae, texture,
                         cfg.quant_scale, cfg.bit_width)
    state = stages.run("fusion", fuse, vectors, ShuffleRandomness(cfg.seed),
                       cfg.big_m, cfg.bit_width)
    key = stages.run("keygen", generate_key, Template(state.bt), cfg.key_bits)
    return state, key


def run_pipeline(fp_path, iris_path, cfg: PipelineConfig, dump_dir=None) -> RunReport:
    """Full pipeline over two image files; optionally dumps every intermediate."""
    stages = _Stages()
    fp_img = load_image(fp_path)
    iris_img = load_image(iris_path)
    minutiae, fp_inter = extract_fingerprint_features(fp_img, cfg, stages)
    texture, ir_inter = extract_iris_features(iris_img, cfg, stages)
    state, key = fuse_and_derive(minutiae, texture, cfg, stages)
    d = len(distinct(Template(state.bt)).values)
    report = RunReport(timings=stages.timings, minutiae_count=len(minutiae),
                       coeff_count=len(texture), distinct_count=d, key=key)
    if dump_dir is not None:
        report.artifacts = _dump_artifacts(dump_dir, fp_inter, ir_inter, state, report)
    return report


def _dump_artifacts(dump_dir, fp_inter, ir_inter, state: FusionState,
                    report: RunReport) -> list[str]:
    import os

    os.makedirs(dump_dir, exist_ok=True)
    written = []

    def emit(name, writer):
        path = os.path.join(dump_dir, name)
        writer(path)
        written.append(path)

    emit("fp_equalized.pgm", lambda p: save_pgm(fp_inter["equalized"], p))
    emit("fp_wiener.pgm", lambda p: save_pgm(fp_inter["wiener"], p))
    mask = fp_inter["mask"]
    emit("fp_mask.pgm", lambda p: save_pgm(mask.pixel_mask().astype(np.uint8) * 255, p))
    field_ = fp_inter["orientation"]
    degrees = np.where(field_.validity, np.degrees(field_.angles), -1.0)
    emit("fp_orientation.csv", lambda p: np.savetxt(p, degrees, fmt="%.3f", delimiter=","))
    emit("fp_enhanced.pgm", lambda p: save_pgm(fp_inter["enhanced"], p))
    emit("fp_binary.pgm", lambda p: save_pgm(fp_inter["binary"], p))
    emit("fp_thinned.pgm", lambda p: save_pgm(fp_inter["thinned"], p))
    minutiae = [{"x": m.x, "y": m.y, "kind": m.kind} for m in fp_inter["minutiae"].minutiae]
    emit("fp_minutiae.json", lambda p: _write_json(p, minutiae))

    emit("iris_edges.pgm", lambda p: save_pgm(ir_inter["edges"].bits * np.uint8(255), p))
    bounds = ir_inter["bounds"]
    circles = {"pupil": {"cx": bounds.pupil.cx, "cy": bounds.pupil.cy, "r": bounds.pupil.r},
               "iris": {"cx": bounds.iris.cx, "cy": bounds.iris.cy, "r": bounds.iris.r}}
    emit("iris_circles.json", lambda p: _write_json(p, circles))
    emit("iris_noise_mask.pgm",
         lambda p: save_pgm(bounds.noise_mask.astype(np.uint8) * 255, p))
    norm = ir_inter["normalized"]
    emit("iris_normalized.pgm",
         lambda p: save_pgm(np.clip(np.floor(norm.values + 0.5), 0, 255).astype(np.uint8), p))
    coeffs = [[c.real, c.imag] for c in ir_inter["texture"].coeffs]
    emit("iris_coeffs.json", lambda p: _write_json(p, coeffs))

    emit("report.json", lambda p: _write_json(p, {
        "timings": report.timings,
        "minutiae": report.minutiae_count,
        "coefficients": report.coeff_count,
        "distinct": report.distinct_count,
        "key_bits": report.key.bitstring(),
        "key_hex": report.key.hex(),
    }))
    return written


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
