"""Command line interface.

    biokey derive --fingerprint F --iris I [--seed S] [--key-bits K]
                  [--config PATH] [--dump DIR] [--format bits|hex|raw]
    biokey fixtures <kind> [geometry flags] --out PATH

Exit codes: 0 success, 2 I/O failure, 3 bad parameter, 4 stage failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from .config import PipelineConfig, load_config
from .errors import InvalidInputError, InvalidParameterError, StageFailure
from .fixtures import TEXTURE_MODES, make_fixtures
from .image import load_image
from .pipeline import run_pipeline

EXIT_OK = 0
EXIT_IO = 2
EXIT_PARAMETER = 3
EXIT_STAGE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biokey")
    sub = parser.add_subparsers(dest="command", required=True)

    derive = sub.add_parser("derive", help="derive a key from a fingerprint and an iris image")
    derive.add_argument("--fingerprint", required=True, help="fingerprint image (PGM/PNG)")
    derive.add_argument("--iris", required=True, help="iris image (PGM/PNG)")
    derive.add_argument("--seed", type=int, default=None, help="shuffle seed (overrides config)")
    derive.add_argument("--key-bits", type=int, default=None, help="key length k (overrides config)")
    derive.add_argument("--config", default=None,
                        help="config file; falls back to $BIOKEY_CONFIG, then defaults")
    derive.add_argument("--dump", default=None, metavar="DIR",
                        help="write every intermediate artifact under DIR")
    derive.add_argument("--format", choices=("bits", "hex", "raw"), default="bits")

    fixtures = sub.add_parser("fixtures", help="generate synthetic test images")
    kinds = fixtures.add_subparsers(dest="kind", required=True)

    stripes = kinds.add_parser("fingerprint-stripes")
    stripes.add_argument("--width", type=int, default=512)
    stripes.add_argument("--height", type=int, default=512)
    stripes.add_argument("--theta-deg", type=float, default=60.0, help="ridge angle, degrees")
    stripes.add_argument("--period", type=float, default=9.0, help="ridge spacing, pixels")
    stripes.add_argument("--seam", type=float, default=0.5,
                         help="ridge-break position as a fraction; outside (0,1) disables")
    stripes.add_argument("--amplitude", type=float, default=70.0)
    stripes.add_argument("--mean", type=float, default=128.0)
    stripes.add_argument("--out", required=True)

    eye = kinds.add_parser("eye-annulus")
    eye.add_argument("--width", type=int, default=512)
    eye.add_argument("--height", type=int, default=512)
    eye.add_argument("--pupil-cx", type=int, default=256)
    eye.add_argument("--pupil-cy", type=int, default=256)
    eye.add_argument("--pupil-r", type=int, default=60)
    eye.add_argument("--iris-cx", type=int, default=None)
    eye.add_argument("--iris-cy", type=int, default=None)
    eye.add_argument("--iris-r", type=int, default=160)
    eye.add_argument("--pupil-level", type=int, default=30)
    eye.add_argument("--iris-level", type=int, default=120)
    eye.add_argument("--sclera-level", type=int, default=210)
    eye.add_argument("--texture", choices=TEXTURE_MODES, default="none")
    eye.add_argument("--texture-amp", type=float, default=12.0)
    eye.add_argument("--angular-freq", type=int, default=8)
    eye.add_argument("--radial-freq", type=int, default=5)
    eye.add_argument("--angular-offset", type=float, default=0.0)
    eye.add_argument("--eyelid-y", type=int, default=None)
    eye.add_argument("--eyelid-level", type=int, default=70)
    eye.add_argument("--out", required=True)
    return parser


def _load_cfg(args) -> PipelineConfig:
    path = args.config or os.environ.get("BIOKEY_CONFIG")
    cfg = load_config(path) if path else PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.key_bits is not None:
        cfg.key_bits = args.key_bits
    return cfg.validate()


def _cmd_derive(args) -> int:
    try:
        cfg = _load_cfg(args)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER

    for path in (args.fingerprint, args.iris):
        try:
            load_image(path)
        except (OSError, InvalidInputError) as exc:
            print(f"error: cannot read image '{path}': {exc}", file=sys.stderr)
            return EXIT_IO

    try:
        report = run_pipeline(args.fingerprint, args.iris, cfg, dump_dir=args.dump)
    except StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER

    if args.format == "bits":
        print(report.key.bitstring())
    elif args.format == "hex":
        print(report.key.hex())
    else:
        sys.stdout.buffer.write(report.key.to_bytes())
        sys.stdout.buffer.flush()
    return EXIT_OK


def _cmd_fixtures(args) -> int:
    if args.kind == "fingerprint-stripes":
        params = dict(width=args.width, height=args.height,
                      theta=math.radians(args.theta_deg), period=args.period,
                      seam=args.seam, amplitude=args.amplitude, mean=args.mean)
    else:
        params = dict(width=args.width, height=args.height,
                      pupil_cx=args.pupil_cx, pupil_cy=args.pupil_cy,
                      pupil_r=args.pupil_r, iris_r=args.iris_r,
                      iris_cx=args.iris_cx, iris_cy=args.iris_cy,
                      pupil_level=args.pupil_level, iris_level=args.iris_level,
                      sclera_level=args.sclera_level, texture=args.texture,
                      texture_amp=args.texture_amp, angular_freq=args.angular_freq,
                      radial_freq=args.radial_freq, angular_offset=args.angular_offset,
                      eyelid_y=args.eyelid_y, eyelid_level=args.eyelid_level)
    try:
        make_fixtures(args.kind, params, args.out)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except OSError as exc:
        print(f"error: cannot write '{args.out}': {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "derive":
        return _cmd_derive(args)
    return _cmd_fixtures(args)


def entry() -> None:
    try:
        sys.exit(main())
    except BrokenPipeError:
        # downstream consumer closed the pipe; die quietly like other CLIs
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        sys.exit(1)


if __name__ == "__main__":
    entry()
