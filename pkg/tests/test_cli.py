import json
import subprocess
import sys

import numpy as np
import pytest

from morse_causal.chart import MorseChart
from morse_causal.cli import build_parser, main, read_config
from morse_causal.regions import boundary_residual


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestClassify:
    @pytest.mark.parametrize("point, vec, cls", [
        ("0,0", "0,1", "TimelikePos"),
        ("2,0.5", "1,0", "Spacelike"),
    ])
    def test_plane_examples(self, capsys, point, vec, cls):
        code, out, _ = run(capsys, "classify", "--point", point, "--vec", vec, "--format", "json")
        assert code == 0
        assert json.loads(out)["class"] == cls

    def test_text_output_has_all_fields(self, capsys):
        code, out, _ = run(capsys, "classify", "--point=0,0", "--vec=0,1")
        keys = [line.split(":")[0] for line in out.splitlines()]
        assert code == 0
        assert keys == ["barrier", "class", "margin", "region"]

    @pytest.mark.parametrize("vec, cls", [("-1,0,1,0", "TimelikePos"), ("1,0,1,0", "Spacelike"),
                                          ("1,0,-1,0", "TimelikeNeg")])
    def test_four_dimensional(self, capsys, vec, cls):
        code, out, _ = run(capsys, "classify", "--point4=1,0,1,0", f"--vec4={vec}", "--format=json")
        assert code == 0
        assert json.loads(out)["class"] == cls

    def test_missing_vector_is_usage_error(self, capsys):
        code, _, _ = run(capsys, "classify", "--point", "0,0")
        assert code == 2

    def test_bad_number_is_usage_error(self, capsys):
        code, _, err = run(capsys, "classify", "--point", "a,b", "--vec", "0,1")
        assert code == 2
        assert "comma-separated" in err


class TestRegions:
    def test_csv_points_on_boundary(self, capsys):
        code, out, _ = run(capsys, "regions", "--trace", "oval", "--n", "400")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "component,s,x1,x2,residual"
        P = np.array([[float(v) for v in ln.split(",")[2:4]] for ln in lines[1:]])
        assert len(P) == 400
        assert np.max(np.abs(boundary_residual(MorseChart(8.0, 2.0), P))) < 1e-9

    def test_json_all_components(self, capsys):
        code, out, _ = run(capsys, "regions", "--trace", "all", "--n", "50", "--format", "json")
        data = json.loads(out)
        assert code == 0
        assert [d["component"] for d in data] == ["oval", "right", "left", "top", "bottom"]


class TestBarrier:
    def test_drift_default_verified(self, capsys, tmp_path):
        out = tmp_path / "cert.json"
        code, _, err = run(capsys, "barrier", "--n", "2000", "--out", str(out))
        cert = json.loads(out.read_text())
        assert code == 0
        assert cert["verdict"] == "Verified"
        assert err.startswith("Verified")

    def test_interpolation_construction_fails(self, capsys):
        code, out, err = run(capsys, "barrier", "--a-interp", "3", "--n", "2000")
        assert code == 1
        assert json.loads(out)["verdict"] != "Verified"

    def test_gap_mismatch_is_error(self, capsys):
        code, _, _ = run(capsys, "barrier", "--b", "1.5", "--n", "500")
        assert code == 2


class TestThreshold:
    def test_single_point_range(self, capsys):
        code, out, _ = run(capsys, "threshold", "--range", "8,8")
        data = json.loads(out)
        assert code == 0
        assert data["b_lo"] == data["b_hi"] == 8.0

    def test_no_verified_point(self, capsys):
        code, _, err = run(capsys, "threshold", "--range", "1,1.05")
        assert code == 1
        assert "NoVerifiedPoint" in err


class TestReach:
    ARGS = ("reach", "--res", "60", "--seed-at", "p")

    def test_rle_deterministic(self, capsys, tmp_path):
        a, b = tmp_path / "a.rle", tmp_path / "b.rle"
        assert main([*self.ARGS, "--out", str(a)]) == 0
        assert main([*self.ARGS, "--out", str(b)]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()

    def test_json_summary(self, capsys):
        code, out, _ = run(capsys, *self.ARGS, "--format", "json")
        data = json.loads(out)
        assert code == 0
        assert data["cells"] == 3600
        assert 0 < data["reached"] < 3600

    def test_overlap_sets_exit_code(self, capsys):
        code, out, _ = run(capsys, *self.ARGS, "--against", "p", "--format", "json")
        data = json.loads(out)
        assert data["overlap"] == data["reached"]
        assert code == 1

    def test_seed_outside_domain(self, capsys):
        code, _, _ = run(capsys, "reach", "--res", "20", "--seed", "9,9")
        assert code == 2


class TestConfig:
    def test_read_config(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("# comment\nrange = 8,8\n\ntol=0.1\n")
        assert read_config(str(p)) == {"range": "8,8", "tol": "0.1"}

    def test_config_then_flag_override(self, capsys, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("point=2,0.5\nvec=1,0\nformat=json\n")
        code, out, _ = run(capsys, "classify", "--config", str(p))
        assert json.loads(out)["class"] == "Spacelike"
        code, out, _ = run(capsys, "classify", "--config", str(p), "--point", "0,0")
        assert code == 0
        assert json.loads(out)["class"] == "TimelikePos"

    def test_missing_config_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "classify", "--config", str(tmp_path / "none.cfg"))
        assert code == 2


class TestMisc:
    def test_appendix_small(self, capsys):
        code, out, _ = run(capsys, "appendix", "--points", "50", "--curves", "20")
        assert code == 0
        assert all(line.startswith("PASS") for line in out.splitlines())
        assert len(out.splitlines()) == 4

    def test_parser_lists_commands(self):
        text = build_parser().format_help()
        for name in ("classify", "regions", "barrier", "threshold", "reach", "appendix"):
            assert name in text

    def test_module_entry_point(self):
        r = subprocess.run([sys.executable, "-m", "morse_causal", "classify", "--point=0,0", "--vec=0,1"],
                           capture_output=True, text=True)
        assert r.returncode == 0
        assert "TimelikePos" in r.stdout
