import json

import numpy as np
import pytest

from geonorm import assets
from geonorm.cli import main, read_image, write_image
from geonorm.errors import MalformedHeader
from geonorm.raster import Raster
from geonorm.sphere import write_spherical

from conftest import ASSETS_DIR


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def blob_pgm(tmp_path):
    path = tmp_path / "blob.pgm"
    write_image(assets.blob(129), path)
    return str(path)


class TestImageIO:
    def test_write_read_roundtrip_within_quantization(self, tmp_path):
        rng = np.random.default_rng(0)
        r = Raster.from_array(rng.uniform(0.0, 1.0, (13, 17)), pitch=0.5)
        path = tmp_path / "r.pgm"
        write_image(r, path, maxval=255)
        back = read_image(path)
        assert np.abs(back.intensities - r.intensities).max() <= 1.0 / 255
        assert back.pitch == r.pitch and back.origin == r.origin

    def test_p2_and_p5_read_identically(self, tmp_path):
        r = assets.gaussian(33)
        write_image(r, tmp_path / "a.pgm", fmt="P2", maxval=1000)
        write_image(r, tmp_path / "b.pgm", fmt="P5", maxval=1000)
        a = read_image(tmp_path / "a.pgm")
        b = read_image(tmp_path / "b.pgm")
        assert np.array_equal(a.intensities, b.intensities)

    def test_missing_comment_gives_default_geometry(self, tmp_path):
        path = tmp_path / "plain.pgm"
        path.write_bytes(b"P2\n3 3\n255\n0 0 0 0 255 0 0 0 0\n")
        r = read_image(path)
        assert r.pitch == 1.0
        assert r.origin == (-1.0, -1.0)

    def test_sixteen_bit_binary(self, tmp_path):
        r = assets.gaussian(17)
        write_image(r, tmp_path / "w.pgm", maxval=65535)
        back = read_image(tmp_path / "w.pgm")
        assert np.abs(back.intensities - r.intensities).max() <= 1.0 / 65535

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P7\n3 3\n255\n")
        with pytest.raises(MalformedHeader):
            read_image(path)


class TestMomentsCommand:
    def test_two_pixel_exact_values(self, tmp_path, capsys):
        # Unit pixels at coordinates (+-1, 0) on a 3x3 pitch-1 grid.  The
        # mass is collinear, so the invariants are degenerate (exit 4),
        # but the moments print exactly first.
        path = tmp_path / "two.pgm"
        path.write_bytes(b"P2\n# geonorm pitch=1.0 origin=-1.0 -1.0\n"
                         b"3 3\n1\n0 0 0 1 0 1 0 0 0\n")
        code, out, _ = run(capsys, ["moments", str(path)])
        assert code == 4
        assert "mu00=2" in out.splitlines()
        assert "mu20=2" in out.splitlines()

    def test_full_report_on_generic_image(self, blob_pgm, capsys):
        code, out, _ = run(capsys, ["moments", blob_pgm])
        assert code == 0
        keys = {line.split("=")[0] for line in out.splitlines()}
        assert {"centroid1", "centroid2", "mu00", "mu30", "psi1", "psi2",
                "psi3", "i1", "i4"} <= keys

    def test_zero_image_exit_code(self, tmp_path, capsys):
        path = tmp_path / "zero.pgm"
        path.write_bytes(b"P2\n2 2\n255\n0 0 0 0\n")
        code, _, err = run(capsys, ["moments", str(path)])
        assert code == 3
        assert "zero mass" in err

    def test_gaussian_matches_oracle_file(self, capsys):
        with open(ASSETS_DIR / "oracles.json") as fh:
            oracle = json.load(fh)["gaussian"]
        code, out, _ = run(capsys,
                           ["moments", str(ASSETS_DIR / "gaussian.pgm")])
        assert code == 0
        got = dict(line.split("=") for line in out.splitlines())
        # The PGM stores intensities scaled to [0, 1]; mu00 matches the
        # closed form up to that normalization, the ratios exactly.
        mu00 = float(got["mu00"])
        assert abs(float(got["mu20"]) / mu00
                   - oracle["mu20"] / oracle["mu00"]) \
            <= 0.01 * oracle["mu20"] / oracle["mu00"]
        assert abs(float(got["mu02"]) / mu00
                   - oracle["mu02"] / oracle["mu00"]) \
            <= 0.01 * oracle["mu02"] / oracle["mu00"]

    def test_missing_file_exit_code(self, capsys):
        code, _, err = run(capsys, ["moments", "no-such-file.pgm"])
        assert code == 2


class TestNormalizeCommand:
    def test_similarity_run_writes_outputs(self, tmp_path, blob_pgm,
                                           capsys):
        out = tmp_path / "norm.pgm"
        code, _, _ = run(capsys, ["normalize", blob_pgm, "-o", str(out),
                                  "--group", "similarity"])
        assert code == 0
        sidecar = (tmp_path / "norm.pgm.map").read_text()
        fields = dict(line.split("=", 1)
                      for line in sidecar.strip().splitlines())
        assert fields["map"].startswith("affine ")
        residuals = [abs(float(v)) for v in fields["residuals"].split()]
        assert max(residuals) <= 1e-6
        assert fields["contrast_factor"] == "none"
        back = read_image(out)
        assert back.intensities.max() > 0

    def test_projective_with_reference_targets(self, tmp_path, blob_pgm,
                                               capsys):
        out = tmp_path / "p.pgm"
        code, _, _ = run(capsys, ["normalize", blob_pgm, "-o", str(out),
                                  "--group", "projective",
                                  "--reference", blob_pgm])
        assert code == 0
        sidecar = (tmp_path / "p.pgm.map").read_text()
        fields = dict(line.split("=", 1)
                      for line in sidecar.strip().splitlines())
        res = [abs(float(v)) for v in fields["residuals"].split()[:2]]
        assert max(res) <= 1e-6

    def test_infeasible_targets_exit_five(self, tmp_path, blob_pgm,
                                          capsys):
        out = tmp_path / "bad.pgm"
        code, _, err = run(capsys, ["normalize", blob_pgm, "-o", str(out),
                                    "--group", "projective",
                                    "--targets", "1000.0", "1000.0"])
        assert code == 5
        assert out.exists()  # best-effort output still written
        assert (tmp_path / "bad.pgm.map").exists()

    def test_usage_error_exit_one(self, capsys):
        assert main(["normalize"]) == 1
        capsys.readouterr()


class TestVerifyCommand:
    def test_seed_determinism_and_concurrency(self, tmp_path, blob_pgm,
                                              capsys):
        args = ["verify", blob_pgm, "--group", "similarity",
                "--trials", "6", "--seed", "7"]
        a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
        assert run(capsys, args + ["--csv", str(a)])[0] == 0
        assert run(capsys, args + ["--csv", str(b)])[0] == 0
        assert run(capsys, args + ["--csv", str(c), "--jobs", "4"])[0] == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.read_bytes() == c.read_bytes()

    def test_summary_reports_pass(self, tmp_path, blob_pgm, capsys):
        code, out, _ = run(capsys, ["verify", blob_pgm, "--group",
                                    "translation", "--trials", "4"])
        assert code == 0
        assert "result=PASS" in out

    def test_identity_range_trial(self, tmp_path, capsys):
        # A single-trial translation run on an already centered image with
        # zero-width ranges is an exact self-comparison.
        path = tmp_path / "sym.pgm"
        r = assets.gaussian(65)
        write_image(r, path)
        code, out, _ = run(capsys, ["verify", str(path), "--group",
                                    "translation", "--trials", "1"])
        assert code == 0
        assert "failures=0" in out

    def test_sphere_group(self, tmp_path, capsys):
        path = tmp_path / "s.txt"
        write_spherical(assets.sphere_two_blobs(64, 128), path)
        csv_path = tmp_path / "s.csv"
        code, out, _ = run(capsys, ["verify", str(path), "--group",
                                    "sphere", "--trials", "2",
                                    "--csv", str(csv_path)])
        assert code == 0
        assert "result=PASS" in out
        header = csv_path.read_text().splitlines()[0]
        assert header == "trial,map,mean_abs_frac,max_abs_frac," \
                         "law_residual,status"


class TestSphereNormalizeCommand:
    def test_writes_normalized_and_sidecar(self, tmp_path, capsys):
        path = tmp_path / "in.txt"
        write_spherical(assets.sphere_two_blobs(64, 128), path)
        out = tmp_path / "out.txt"
        code, _, _ = run(capsys, ["sphere-normalize", str(path),
                                  "-o", str(out)])
        assert code == 0
        sidecar = (tmp_path / "out.txt.map").read_text()
        assert sidecar.startswith("map=rotation3 ")
        assert "symmetry_order=1" in sidecar


class TestConfigFile:
    def test_config_defaults_with_flag_override(self, tmp_path, blob_pgm,
                                                capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"group": "rotation", "trials": 2}))
        code, out, _ = run(capsys, ["--config", str(cfg), "verify",
                                    blob_pgm])
        assert code == 0
        assert "group=rotation" in out
        assert "trials=2" in out
        code, out, _ = run(capsys, ["--config", str(cfg), "verify",
                                    blob_pgm, "--group", "scale"])
        assert code == 0
        assert "group=scale" in out
