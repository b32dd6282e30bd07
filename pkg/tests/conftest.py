import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from biokey.config import PipelineConfig
from biokey.fixtures import make_fixtures

# Geometry of the bundled synthetic pair used by the CLI and acceptance tests.
BUNDLED_FP = dict(width=512, height=512, theta=math.radians(60.0), period=9.0,
                  seam=0.5, amplitude=70.0, mean=128.0)
BUNDLED_EYE = dict(width=512, height=512, pupil_cx=256, pupil_cy=256, pupil_r=60,
                   iris_r=160, texture="sin", texture_amp=12.0, eyelid_y=130)


@pytest.fixture(scope="session")
def bundled_paths(tmp_path_factory):
    """Deterministic 512x512 fingerprint + eye PGM pair."""
    d = tmp_path_factory.mktemp("bundled")
    fp = d / "fingerprint.pgm"
    eye = d / "eye.pgm"
    make_fixtures("fingerprint-stripes", BUNDLED_FP, fp)
    make_fixtures("eye-annulus", BUNDLED_EYE, eye)
    return str(fp), str(eye)


@pytest.fixture()
def default_cfg():
    return PipelineConfig()
