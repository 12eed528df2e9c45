"""CLI contract: exit codes, file round trips, verification plumbing."""

import json
from fractions import Fraction as F

import numpy as np
import pytest

from cubeforms import serialize as ser
from cubeforms.cli import main
from cubeforms.forms import Cube, Polynomial, PolyForm
from cubeforms.gridforms import GridForm


@pytest.fixture
def forms_dir(tmp_path):
    x = Polynomial.variable(2, 1)
    y = Polynomial.variable(2, 2)
    files = {
        "xdy": PolyForm(2, 1, {(2,): x}),
        "closed": PolyForm(2, 1, {(1,): y, (2,): x}),
        "area": PolyForm(2, 2, {(1, 2): Polynomial.constant(2, 1)}),
        "zero": PolyForm.zero(2, 1),
    }
    for name, w in files.items():
        ser.write_json(str(tmp_path / f"{name}.json"), ser.polyform_to_json(w))
    return tmp_path


def read_form(path):
    return ser.polyform_from_json(ser.read_json(str(path)))


class TestD:
    def test_writes_derivative(self, forms_dir):
        out = forms_dir / "out.json"
        assert main(["d", str(forms_dir / "xdy.json"), str(out)]) == 0
        assert read_form(out) == PolyForm(2, 2, {(1, 2): Polynomial.constant(2, 1)})

    def test_closed_input_gives_zero_file(self, forms_dir):
        out = forms_dir / "out.json"
        assert main(["d", str(forms_dir / "closed.json"), str(out)]) == 0
        assert read_form(out).is_zero

    def test_malformed_json_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"ambient_dim": 2,,}')
        assert main(["d", str(bad), str(tmp_path / "out.json")]) == 1
        err = capsys.readouterr().err
        assert "line" in err and "col" in err


class TestPrimitive:
    def test_worked_example(self, forms_dir):
        out = forms_dir / "theta.json"
        cert = forms_dir / "cert.json"
        code = main(["primitive", str(forms_dir / "area.json"), str(out),
                     "--cert", str(cert)])
        assert code == 0
        theta = read_form(out)
        expected = PolyForm(2, 1, {(1,): Polynomial(2, {(0, 0): F(1, 2),
                                                        (0, 1): F(-1)})})
        assert theta == expected
        cert_obj = ser.read_json(str(cert))
        assert cert_obj["verified"] is True

    def test_non_closed_exits_1(self, forms_dir, capsys):
        code = main(["primitive", str(forms_dir / "xdy.json"),
                     str(forms_dir / "out.json")])
        assert code == 1
        assert "not closed" in capsys.readouterr().err

    def test_zero_form(self, forms_dir):
        out = forms_dir / "theta.json"
        assert main(["primitive", str(forms_dir / "zero.json"), str(out)]) == 0
        assert read_form(out).is_zero


class TestClosedApprox:
    def test_worked_example(self, forms_dir):
        out = forms_dir / "approx.json"
        code = main(["closed-approx", str(forms_dir / "xdy.json"), str(out)])
        assert code == 0
        assert read_form(out).d().is_zero

    def test_fixed_point_round_trip(self, forms_dir):
        out = forms_dir / "approx.json"
        main(["closed-approx", str(forms_dir / "closed.json"), str(out)])
        assert read_form(out) == read_form(forms_dir / "closed.json")

    def test_tau_scan_defect_dominates(self, forms_dir):
        plain_cert = forms_dir / "plain.json"
        scan_cert = forms_dir / "scan.json"
        main(["closed-approx", str(forms_dir / "xdy.json"),
              str(forms_dir / "a.json"), "--cert", str(plain_cert)])
        main(["closed-approx", str(forms_dir / "xdy.json"),
              str(forms_dir / "b.json"), "--cert", str(scan_cert),
              "--tau-scan", "4"])
        plain = ser.certificate_from_json(ser.read_json(str(plain_cert)))
        scan = ser.certificate_from_json(ser.read_json(str(scan_cert)))
        assert scan.defect_norm.upper <= plain.defect_norm.upper

    def test_trace_written_and_verifies(self, forms_dir):
        trace = forms_dir / "trace.json"
        main(["closed-approx", str(forms_dir / "xdy.json"),
              str(forms_dir / "a.json"), "--trace", str(trace)])
        assert main(["verify", str(trace)]) == 0


class TestVerify:
    def test_certificate_ok(self, forms_dir):
        cert = forms_dir / "cert.json"
        main(["primitive", str(forms_dir / "area.json"),
              str(forms_dir / "t.json"), "--cert", str(cert)])
        assert main(["verify", str(cert)]) == 0

    def test_tampered_certificate_exits_2(self, forms_dir):
        cert = forms_dir / "cert.json"
        main(["primitive", str(forms_dir / "area.json"),
              str(forms_dir / "t.json"), "--cert", str(cert)])
        obj = ser.read_json(str(cert))
        obj["norm_output"]["upper"] = {"num": "1000", "den": "1"}
        ser.write_json(str(cert), obj)
        assert main(["verify", str(cert)]) == 2

    def test_unknown_kind_exits_1(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text('{"kind": "mystery"}')
        assert main(["verify", str(path)]) == 1


class TestSupnormCommand:
    def test_stdout_json(self, forms_dir, capsys):
        assert main(["supnorm", str(forms_dir / "xdy.json")]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["upper"] == {"num": "1", "den": "1"}


class TestGridCommands:
    @pytest.fixture
    def sign_file(self, tmp_path):
        res = 512
        xs = (np.arange(res) + 0.5) / res
        g = GridForm(Cube.unit(1), 1, res, {(1,): np.sign(xs - 0.5)})
        path = tmp_path / "sign.json"
        ser.write_json(str(path), ser.gridform_to_json(g))
        return path

    def test_mollify_solve(self, sign_file, tmp_path):
        out = tmp_path / "theta.json"
        hist = tmp_path / "hist.json"
        code = main(["mollify-solve", str(sign_file), "--stages", "3",
                     "--radii", "0.15,0.09,0.054", "--degrees", "8,13,21",
                     "--out", str(out), "--history", str(hist)])
        assert code == 0
        history = ser.read_json(str(hist))
        residuals = [s["residual"] for s in history["stages"]]
        assert residuals == sorted(residuals, reverse=True)
        assert main(["verify", str(hist)]) == 0

    def test_mollify_solve_rejects_non_closed(self, tmp_path, capsys):
        res = 64
        xs = (np.arange(res) + 0.5) / res
        arr = np.tile(xs[:, None], (1, res))
        g = GridForm(Cube.unit(2), 1, res, {(2,): arr})  # x dy, not closed
        path = tmp_path / "xdy_grid.json"
        ser.write_json(str(path), ser.gridform_to_json(g))
        code = main(["mollify-solve", str(path), "--stages", "2",
                     "--radii", "0.1,0.05", "--out", str(tmp_path / "t.json"),
                     "--history", str(tmp_path / "h.json")])
        assert code == 1
        assert "not weakly closed" in capsys.readouterr().err

    def test_flat_check_threshold_exit(self, tmp_path):
        res = 64
        xs = (np.arange(res) + 0.5) / res
        arr = np.tile(np.sign(xs - 0.5)[:, None], (1, res))
        g = GridForm(Cube.unit(2), 1, res, {(2,): arr})
        path = tmp_path / "signdy.json"
        ser.write_json(str(path), ser.gridform_to_json(g))
        report = tmp_path / "report.json"
        code = main(["flat-check", str(path), "--simplices", "200", "--seed", "7",
                     "--scales", "0.05,0.3", "--nprime", "5.0",
                     "--out", str(report)])
        assert code == 2
        assert main(["verify", str(report)]) == 0

    def test_flat_check_empty(self, tmp_path):
        g = GridForm(Cube.unit(2), 1, 8, {(1,): np.ones((8, 8))})
        path = tmp_path / "const.json"
        ser.write_json(str(path), ser.gridform_to_json(g))
        report = tmp_path / "report.json"
        code = main(["flat-check", str(path), "--simplices", "0", "--seed", "1",
                     "--scales", "0.05,0.2", "--out", str(report)])
        assert code == 0
        assert ser.read_json(str(report))["samples"] == []


class TestRunReports:
    def test_report_is_self_contained(self, forms_dir):
        report = forms_dir / "run.json"
        main(["d", str(forms_dir / "xdy.json"), str(forms_dir / "out.json"),
              "--report", str(report)])
        obj = ser.read_json(str(report))
        assert obj["kind"] == "run_report"
        assert obj["command"] == "d"
        assert str(forms_dir / "xdy.json") in obj["inputs"]
        assert len(next(iter(obj["inputs"].values()))) == 64  # sha256 hex
