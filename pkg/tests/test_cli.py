import json
import subprocess
import sys

import pytest

from spraylab.cli import main
from spraylab.expression import parse
from spraylab.presets import get_preset


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestPresets:
    def test_catalog_coefficients_exact(self):
        at = get_preset("anderson-thompson")
        assert at.G == ("(y1^2+y2^2)/2", "2*y1*y2")
        yang = get_preset("yang(0.5)")
        assert parse(yang.G[0], 2) == parse("0.5*sqrt(y1^2+y2^2)*y1", 2)
        assert parse(yang.G[1], 2) == parse("0.5*sqrt(y1^2+y2^2)*y2", 2)

    def test_yang_name_forms(self):
        assert get_preset("yang").name == "yang(0.5)"
        assert get_preset("yang(0.25)").G[0].startswith("0.25*")
        assert get_preset("yang(lambda=0.25)") == get_preset("yang(0.25)")

    def test_flat_presets(self):
        assert get_preset("flat2").dim == 2
        assert get_preset("flat3").dim == 3
        assert get_preset("flat3").G == ("0", "0", "0")

    def test_unknown(self):
        with pytest.raises(KeyError):
            get_preset("nope")


class TestAnalyze:
    def test_flat2_all_symbolic(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--preset", "flat2")
        assert code == 0
        report = json.loads(out)
        assert report["passed"] is True
        assert report["analyze"]["classification"]["kind"] == "flat"
        for v in report["analyze"]["identities"].values():
            assert v["level"] == "symbolic"

    def test_anderson_thompson_isotropic(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--preset", "anderson-thompson")
        assert code == 0
        report = json.loads(out)
        assert report["analyze"]["classification"]["kind"] == "isotropic"

    def test_yang_isotropic(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--preset", "yang(0.5)")
        assert code == 0
        report = json.loads(out)
        assert report["analyze"]["classification"]["kind"] == "isotropic"

    def test_text_format(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--preset", "flat2",
                               "--format", "text")
        assert code == 0
        assert "[PASS] analyze" in out

    def test_input_file(self, capsys, tmp_path):
        path = tmp_path / "spray.json"
        path.write_text(json.dumps({"dim": 2, "G": ["0", "0"], "name": "custom"}))
        code, out, _ = run_cli(capsys, "analyze", "--input", str(path))
        assert code == 0
        assert json.loads(out)["input"]["name"] == "custom"

    def test_invalid_homogeneity_reported(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"dim": 1, "G": ["y1^3"]}))
        code, out, _ = run_cli(capsys, "analyze", "--input", str(path))
        assert code == 2
        report = json.loads(out)
        assert report["passed"] is False
        assert report["analyze"]["validation"][0]["zero"] is False


class TestMetrizable:
    def test_flat_euclidean_passes(self, capsys):
        code, out, _ = run_cli(capsys, "metrizable", "--preset", "flat2",
                               "--finsler", "sqrt(y1^2+y2^2)")
        assert code == 0
        report = json.loads(out)
        assert report["passed"] is True
        assert report["metrizable"]["recovery"]["F"] == "sqrt(y1^2+y2^2)"

    def test_preset_candidate_used(self, capsys):
        # flat2 carries its Euclidean candidate in the preset
        code, out, _ = run_cli(capsys, "metrizable", "--preset", "flat2")
        assert code == 0

    def test_anderson_thompson_fails_with_witness(self, capsys):
        code, out, _ = run_cli(capsys, "metrizable", "--preset", "anderson-thompson")
        assert code == 2
        report = json.loads(out)
        cond = report["metrizable"]["conditions"]
        assert cond["d_h"]["zero"] is False
        assert cond["d_h"]["witness"] is not None

    def test_degenerate_theta(self, capsys):
        code, out, _ = run_cli(capsys, "metrizable", "--preset", "flat2",
                               "--theta", "x1;0")
        assert code == 2
        cond = json.loads(out)["metrizable"]["conditions"]
        assert cond["rank"]["passed"] is False
        assert cond["positivity"]["status"] == "fail"

    def test_theta_component_count(self, capsys):
        code, _, err = run_cli(capsys, "metrizable", "--preset", "flat2",
                               "--theta", "x1")
        assert code == 1
        assert "components" in err

    def test_missing_candidate(self, capsys, tmp_path):
        path = tmp_path / "nocand.json"
        path.write_text(json.dumps({"dim": 2, "G": ["0", "0"]}))
        code, _, err = run_cli(capsys, "metrizable", "--input", str(path))
        assert code == 1
        assert "candidate" in err


class TestInvolutivity:
    def test_flat2_counts(self, capsys):
        code, out, _ = run_cli(capsys, "involutivity", "--preset", "flat2",
                               "--n-points", "4")
        assert code == 0
        report = json.loads(out)
        sec = report["involutivity"]
        assert sec["expected"] == {"dim_g1": 4, "dim_g2": 6, "prefix_dims": [2, 0]}
        assert sec["all_points_match"] is True

    def test_flat3_counts(self, capsys):
        code, out, _ = run_cli(capsys, "involutivity", "--preset", "flat3",
                               "--n-points", "3")
        assert code == 0
        sec = json.loads(out)["involutivity"]
        assert sec["expected"]["dim_g1"] == 9
        assert sec["expected"]["dim_g2"] == 18
        assert sec["expected"]["prefix_dims"] == [6, 3, 0]

    def test_universality_across_presets(self, capsys):
        for preset in ("anderson-thompson", "yang(0.5)", "riemannian"):
            code, out, _ = run_cli(capsys, "involutivity", "--preset", preset,
                                   "--n-points", "2")
            assert code == 0
            assert json.loads(out)["involutivity"]["all_points_match"] is True


class TestGeodesics:
    def test_flat_trace_csv(self, capsys, tmp_path):
        out_path = tmp_path / "report.json"
        code, _, _ = run_cli(capsys, "geodesics", "--preset", "flat2",
                             "--x0", "0,0", "--y0", "1,0", "--steps", "100",
                             "--out", str(out_path))
        assert code == 0
        report = json.loads(out_path.read_text())
        trace_file = tmp_path / "report.trace.csv"
        assert trace_file.exists()
        assert (tmp_path / "report.trace.json").exists()
        lines = trace_file.read_text().strip().splitlines()
        assert lines[0] == "t,x1,x2,y1,y2"
        endpoint = report["geodesics"]["trace"]["endpoint_x"]
        assert endpoint == pytest.approx([1.0, 0.0], abs=1e-9)

    def test_compare_yang_passes(self, capsys):
        code, out, _ = run_cli(capsys, "geodesics", "--preset", "flat2",
                               "--x0", "0,0", "--y0", "1,0",
                               "--compare", "yang(0.5)")
        assert code == 0
        cmp_sec = json.loads(out)["geodesics"]["compare"]
        assert cmp_sec["vertical_parallel"] is True
        assert cmp_sec["trace_distance"] < 1e-4

    def test_compare_anderson_thompson_fails(self, capsys):
        code, out, _ = run_cli(capsys, "geodesics", "--preset", "flat2",
                               "--x0", "0,0", "--y0", "1,1",
                               "--compare", "anderson-thompson")
        assert code == 2
        cmp_sec = json.loads(out)["geodesics"]["compare"]
        assert cmp_sec["vertical_parallel"] is False
        assert cmp_sec["witness"] is not None

    def test_bad_vector(self, capsys):
        code, _, err = run_cli(capsys, "geodesics", "--preset", "flat2",
                               "--x0", "0", "--y0", "1,0")
        assert code == 1
        assert "--x0" in err


class TestUsageErrors:
    def test_no_spray(self, capsys):
        code, _, err = run_cli(capsys, "analyze")
        assert code == 1
        assert "preset" in err.lower() or "input" in err.lower()

    def test_unknown_preset(self, capsys):
        code, _, err = run_cli(capsys, "analyze", "--preset", "nope")
        assert code == 1

    def test_both_sources_rejected(self, capsys, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps({"dim": 2, "G": ["0", "0"]}))
        code, _, _ = run_cli(capsys, "analyze", "--preset", "flat2",
                             "--input", str(path))
        assert code == 1

    def test_bad_json(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{")
        code, _, err = run_cli(capsys, "analyze", "--input", str(path))
        assert code == 1

    def test_bad_expression_in_file(self, capsys, tmp_path):
        path = tmp_path / "badexpr.json"
        path.write_text(json.dumps({"dim": 2, "G": ["y3", "0"]}))
        code, _, err = run_cli(capsys, "analyze", "--input", str(path))
        assert code == 1
        assert "out of range" in err


class TestDeterminism:
    def test_reports_byte_identical(self):
        cmd = [sys.executable, "-m", "spraylab.cli", "analyze",
               "--preset", "anderson-thompson", "--seed", "42"]
        a = subprocess.run(cmd, capture_output=True, check=True)
        b = subprocess.run(cmd, capture_output=True, check=True)
        assert a.stdout == b.stdout
        assert a.stdout  # non-empty

    def test_seed_changes_report(self, capsys):
        _, out1, _ = run_cli(capsys, "analyze", "--preset", "yang(0.5)",
                             "--seed", "1")
        _, out2, _ = run_cli(capsys, "analyze", "--preset", "yang(0.5)",
                             "--seed", "2")
        assert json.loads(out1)["seed"] != json.loads(out2)["seed"]

    def test_digest_tracks_input(self, capsys):
        _, out1, _ = run_cli(capsys, "analyze", "--preset", "flat2")
        _, out2, _ = run_cli(capsys, "analyze", "--preset", "flat3")
        assert json.loads(out1)["input_digest"] != json.loads(out2)["input_digest"]
