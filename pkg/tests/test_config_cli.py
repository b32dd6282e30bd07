import json
import math

import numpy as np
import pytest

from biokey.cli import main
from biokey.config import PipelineConfig, parse_config, serialize_config
from biokey.errors import InvalidParameterError
from biokey.fixtures import make_fixtures
from biokey.image import load_image


class TestConfig:
    def test_defaults_validate(self):
        PipelineConfig().validate()

    def test_round_trip_is_canonical(self):
        cfg = PipelineConfig(seed=99, radial_res=12, canny_sigma=1.5)
        text = serialize_config(cfg)
        assert serialize_config(parse_config(text)) == text

    def test_scrambled_file_parses_to_same_canonical_form(self):
        cfg = PipelineConfig(seed=7)
        canonical = serialize_config(cfg)
        scrambled = "# comment\n\nseed = 7\nradial_res=20   # trailing\n"
        assert serialize_config(parse_config(scrambled)) == canonical

    def test_unknown_key_rejected(self):
        with pytest.raises(InvalidParameterError):
            parse_config("no_such_knob = 3\n")

    def test_bad_value_rejected(self):
        with pytest.raises(InvalidParameterError):
            parse_config("seed = banana\n")

    def test_malformed_line_rejected(self):
        with pytest.raises(InvalidParameterError):
            parse_config("this is not a setting\n")

    @pytest.mark.parametrize("line", [
        "gabor_f0 = -1.0",
        "canny_low_ratio = 1.5",
        "pupil_r_min = 90\npupil_r_max = 80",
        "radial_res = 1",
        "bit_width = 0",
        "key_bits = 0",
        "hough_min_support = 0",
    ])
    def test_out_of_range_rejected(self, line):
        with pytest.raises(InvalidParameterError):
            parse_config(line + "\n")

    def test_int_field_rejects_float_literal(self):
        with pytest.raises(InvalidParameterError):
            parse_config("angular_res = 12.5\n")


@pytest.fixture(scope="module")
def small_pair(tmp_path_factory):
    """Small fixture pair plus a config tuned to its geometry."""
    d = tmp_path_factory.mktemp("cli")
    fp = d / "fp.pgm"
    eye = d / "eye.pgm"
    make_fixtures("fingerprint-stripes",
                  dict(width=160, height=160, theta=math.radians(50), period=9.0, seam=0.5), fp)
    make_fixtures("eye-annulus",
                  dict(width=140, height=140, pupil_cx=70, pupil_cy=70, pupil_r=18,
                       iris_r=48, texture="sin", texture_amp=12.0), eye)
    cfg = PipelineConfig(pupil_r_min=12, pupil_r_max=24, iris_r_min=40, iris_r_max=56,
                         iris_center_window=6, radial_res=10, angular_res=72)
    cfg_path = d / "small.cfg"
    cfg_path.write_text(serialize_config(cfg))
    return str(fp), str(eye), str(cfg_path)


class TestCliDerive:
    def test_happy_path_prints_bitstring(self, small_pair, capsys):
        fp, eye, cfg = small_pair
        rc = main(["derive", "--fingerprint", fp, "--iris", eye,
                   "--config", cfg, "--seed", "42"])
        out = capsys.readouterr().out.strip()
        assert rc == 0
        assert len(out) == 256 and set(out) <= {"0", "1"}

    def test_hex_format(self, small_pair, capsys):
        fp, eye, cfg = small_pair
        rc = main(["derive", "--fingerprint", fp, "--iris", eye,
                   "--config", cfg, "--seed", "42", "--format", "hex"])
        out = capsys.readouterr().out.strip()
        assert rc == 0
        assert len(out) == 64
        int(out, 16)

    def test_key_bits_flag(self, small_pair, capsys):
        fp, eye, cfg = small_pair
        rc = main(["derive", "--fingerprint", fp, "--iris", eye,
                   "--config", cfg, "--seed", "42", "--key-bits", "64"])
        out = capsys.readouterr().out.strip()
        assert rc == 0 and len(out) == 64

    def test_missing_iris_file_is_io_error(self, small_pair, capsys):
        fp, _, cfg = small_pair
        rc = main(["derive", "--fingerprint", fp, "--iris", "/nonexistent/eye.pgm",
                   "--config", cfg])
        err = capsys.readouterr().err
        assert rc == 2
        assert "/nonexistent/eye.pgm" in err

    def test_bad_parameter_exit_code(self, small_pair, capsys):
        fp, eye, cfg = small_pair
        rc = main(["derive", "--fingerprint", fp, "--iris", eye,
                   "--config", cfg, "--key-bits", "0"])
        assert rc == 3

    def test_stage_failure_exit_code_names_stage(self, small_pair, tmp_path, capsys):
        fp, eye, _ = small_pair
        bad = PipelineConfig(pupil_r_min=2, pupil_r_max=5)  # excludes the true pupil
        cfg_path = tmp_path / "bad.cfg"
        cfg_path.write_text(serialize_config(bad))
        rc = main(["derive", "--fingerprint", fp, "--iris", eye, "--config", str(cfg_path)])
        err = capsys.readouterr().err
        assert rc == 4
        assert "locate-boundaries" in err

    def test_env_var_config_fallback(self, small_pair, capsys, monkeypatch):
        fp, eye, cfg = small_pair
        monkeypatch.setenv("BIOKEY_CONFIG", cfg)
        rc = main(["derive", "--fingerprint", fp, "--iris", eye, "--seed", "42"])
        env_out = capsys.readouterr().out
        rc2 = main(["derive", "--fingerprint", fp, "--iris", eye,
                    "--config", cfg, "--seed", "42"])
        flag_out = capsys.readouterr().out
        assert rc == rc2 == 0
        assert env_out == flag_out

    def test_seed_changes_key(self, small_pair, capsys):
        fp, eye, cfg = small_pair
        main(["derive", "--fingerprint", fp, "--iris", eye, "--config", cfg, "--seed", "1"])
        k1 = capsys.readouterr().out
        main(["derive", "--fingerprint", fp, "--iris", eye, "--config", cfg, "--seed", "2"])
        k2 = capsys.readouterr().out
        assert k1 != k2

    def test_dump_writes_all_artifacts(self, small_pair, tmp_path, capsys):
        fp, eye, cfg = small_pair
        dump = tmp_path / "dump"
        rc = main(["derive", "--fingerprint", fp, "--iris", eye,
                   "--config", cfg, "--seed", "42", "--dump", str(dump)])
        capsys.readouterr()
        assert rc == 0
        names = {p.name for p in dump.iterdir()}
        assert names >= {"fp_equalized.pgm", "fp_wiener.pgm", "fp_mask.pgm",
                         "fp_orientation.csv", "fp_enhanced.pgm", "fp_binary.pgm",
                         "fp_thinned.pgm", "fp_minutiae.json", "iris_edges.pgm",
                         "iris_circles.json", "iris_noise_mask.pgm",
                         "iris_normalized.pgm", "iris_coeffs.json", "report.json"}
        report = json.loads((dump / "report.json").read_text())
        minutiae = json.loads((dump / "fp_minutiae.json").read_text())
        coeffs = json.loads((dump / "iris_coeffs.json").read_text())
        assert report["minutiae"] == len(minutiae)
        assert report["coefficients"] == len(coeffs)
        circles = json.loads((dump / "iris_circles.json").read_text())
        assert abs(circles["pupil"]["r"] - 18) <= 1
        assert abs(circles["iris"]["r"] - 48) <= 1
        # dumped PGMs are loadable
        load_image(dump / "fp_thinned.pgm")
        # orientation CSV parses as a degrees-or-minus-one grid
        grid = np.loadtxt(dump / "fp_orientation.csv", delimiter=",")
        assert ((grid == -1.0) | ((grid >= 0.0) & (grid < 180.0))).all()


class TestCliFixtures:
    def test_generation_and_decode(self, tmp_path, capsys):
        out = tmp_path / "eye.pgm"
        rc = main(["fixtures", "eye-annulus", "--width", "100", "--height", "100",
                   "--pupil-cx", "50", "--pupil-cy", "50", "--pupil-r", "15",
                   "--iris-r", "40", "--out", str(out)])
        assert rc == 0
        img = load_image(out)
        assert img.width == img.height == 100

    def test_same_params_byte_identical(self, tmp_path):
        a = tmp_path / "a.pgm"
        b = tmp_path / "b.pgm"
        args = ["fixtures", "fingerprint-stripes", "--width", "64", "--height", "64",
                "--theta-deg", "30", "--period", "8"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_invalid_geometry_exit_code(self, tmp_path, capsys):
        rc = main(["fixtures", "eye-annulus", "--pupil-r", "60", "--iris-r", "20",
                   "--out", str(tmp_path / "x.pgm")])
        assert rc == 3
