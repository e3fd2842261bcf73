import csv
import io
import json

import numpy as np
import pytest

from realizability.alpha import alpha_spec
from realizability.cli import main
from realizability.core import correlations_of_measure
from realizability.serialization import dump_json, load_spec, measure_from_dict, spec_to_dict


@pytest.fixture
def spec_file(tmp_path):
    def make(alpha, rho, ring=12):
        path = tmp_path / f"spec_{alpha}_{rho}_{ring}.json"
        dump_json(spec_to_dict(alpha_spec(alpha, rho, ring)), path)
        return str(path)
    return make


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestCheck:
    def test_pass(self, spec_file, tmp_path):
        out = tmp_path / "r.csv"
        assert main(["check", "--spec", spec_file(0.5, 0.4), "--out", str(out)]) == 0
        rows = _rows(out.read_text())
        assert all(r["pass"] == "true" for r in rows)
        assert set(rows[0]) == {"condition", "detail", "value", "bound", "pass"}

    def test_fail(self, spec_file, capsys):
        assert main(["check", "--spec", spec_file(0.5, 0.6)]) == 2
        rows = {r["condition"]: r for r in _rows(capsys.readouterr().out)}
        assert rows["structure_function"]["pass"] == "false"

    def test_alpha_flags(self, capsys):
        assert main(["check", "--alpha", "0.5", "--rho", "0.4", "--ring", "16"]) == 0

    def test_exact_row(self, capsys):
        assert main(["check", "--alpha", "0", "--rho", "0.4", "--ring", "3", "--exact"]) == 2
        rows = {r["condition"]: r for r in _rows(capsys.readouterr().out)}
        assert float(rows["lp_feasible"]["value"]) < 0


class TestErrors:
    def test_unknown_flag(self):
        assert main(["check", "--bogus"]) == 1

    def test_unknown_command(self):
        assert main(["nothing"]) == 1

    def test_missing_file(self, tmp_path):
        assert main(["check", "--spec", str(tmp_path / "none.json")]) == 1

    def test_missing_output_dir(self, spec_file, tmp_path):
        assert main(["check", "--spec", spec_file(0.5, 0.4), "--out", str(tmp_path / "x" / "r.csv")]) == 1

    def test_unknown_json_field(self, tmp_path):
        path = tmp_path / "s.json"
        doc = spec_to_dict(alpha_spec(0.5, 0.4, 6))
        doc["note"] = 1
        path.write_text(json.dumps(doc))
        assert main(["check", "--spec", str(path)]) == 1

    def test_missing_spec(self):
        assert main(["check"]) == 1

    def test_no_command(self):
        assert main([]) == 1


class TestBoundsAlpha:
    def test_five_rows(self, capsys):
        assert main(["bounds-alpha", "--grid", "0:2:0.5"]) == 0
        rows = _rows(capsys.readouterr().out)
        assert len(rows) == 5
        assert list(rows[0]) == ["alpha", "R_F", "R_Y", "r_A", "r_S", "r_B"]

    def test_bad_grid(self):
        assert main(["bounds-alpha", "--grid", "0:2"]) == 1


class TestBuildExact:
    def test_round_trip_through_check(self, spec_file, tmp_path, capsys):
        out = tmp_path / "m.json"
        assert main(["build-exact", "--spec", spec_file(0.5, 0.3, 8), "--out", str(out)]) == 0
        mu = measure_from_dict(json.loads(out.read_text()))
        spec = load_spec(str(out))
        assert np.abs(spec.rho1 - correlations_of_measure(mu, 1)).max() <= 1e-12
        assert np.abs(spec.rho2() - correlations_of_measure(mu, 2)).max() <= 1e-12
        ref = alpha_spec(0.5, 0.3, 8)
        assert np.abs(spec.rho2() - ref.rho2()).max() <= 1e-9
        assert main(["check", "--spec", str(out)]) == 0

    def test_ansatz(self, capsys):
        assert main(["build-exact", "--alpha", "0.5", "--rho", "0.15", "--ring", "8",
                     "--method", "ansatz"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["domain"]["extents"] == [8]

    def test_infeasible_writes_certificate(self, tmp_path):
        out = tmp_path / "c.json"
        assert main(["build-exact", "--alpha", "0", "--rho", "0.4", "--ring", "3", "--out", str(out)]) == 2
        assert set(json.loads(out.read_text())) == {"f0", "f1", "f2"}


class TestMaxent:
    def test_outputs(self, tmp_path):
        m, p = tmp_path / "m.json", tmp_path / "p.json"
        assert main(["maxent", "--alpha", "0.5", "--rho", "0.3", "--ring", "6",
                     "--out", str(m), "--potentials", str(p)]) == 0
        pot = json.loads(p.read_text())
        assert len(pot["phi1"]) == 6 and "logZ" in pot
        assert json.loads(m.read_text())["weights"][0]["mask"] == 0

    def test_infeasible(self):
        assert main(["maxent", "--alpha", "0", "--rho", "0.4", "--ring", "3"]) == 2


class TestRadiusLeeYang:
    def test_radius(self, capsys):
        assert main(["radius", "--alpha", "0.5"]) == 0
        rows = {r["quantity"]: r for r in _rows(capsys.readouterr().out)}
        assert float(rows["rho_AS"]["value"]) == pytest.approx(1 / (2 * np.e))

    def test_leeyang_pass(self, capsys):
        assert main(["leeyang", "--alpha", "1.5", "--rho", "0.3", "--ring", "10"]) == 0
        rows = {r["quantity"]: r for r in _rows(capsys.readouterr().out)}
        assert float(rows["b"]["value"]) == 2.25

    def test_leeyang_requires_g_ge_one(self):
        assert main(["leeyang", "--alpha", "0.5", "--rho", "0.3", "--ring", "6"]) == 1


class TestSampling:
    def test_sample_and_estimate(self, tmp_path, capsys):
        s = tmp_path / "s.hex"
        assert main(["sample", "--alpha", "0.5", "--construction", "deletion", "--sites", "100000",
                     "--count", "1", "--seed", "11", "--out", str(s)]) == 0
        assert s.read_text().startswith("# sites=100000")
        r = tmp_path / "e.csv"
        code = main(["estimate", "--samples", str(s), "--max-lag", "2", "--alpha", "0.5",
                     "--out", str(r)])
        assert code == 0
        rows = _rows(r.read_text())
        assert [row["lag"] for row in rows] == ["rho", "1", "2"]

    def test_sample_measure(self, tmp_path):
        m, s = tmp_path / "m.json", tmp_path / "s.hex"
        assert main(["build-exact", "--alpha", "0.5", "--rho", "0.3", "--ring", "6", "--out", str(m)]) == 0
        assert main(["sample", "--measure", str(m), "--count", "100", "--seed", "0x10",
                     "--out", str(s)]) == 0
        assert len(s.read_text().splitlines()) == 101

    def test_seed_determinism(self, tmp_path):
        a, b = tmp_path / "a.hex", tmp_path / "b.hex"
        for path in (a, b):
            main(["sample", "--alpha", "0.75", "--construction", "superposition", "--ring", "10",
                  "--count", "50", "--seed", "7", "--out", str(path)])
        assert a.read_text() == b.read_text()


class TestCertify:
    def test_produce_and_verify(self, tmp_path, capsys):
        c = tmp_path / "c.json"
        args = ["--alpha", "0", "--rho", "0.4", "--ring", "3"]
        assert main(["certify", *args, "--out", str(c)]) == 2
        assert main(["certify", *args, "--certificate", str(c)]) == 2
        rows = {r["quantity"]: r for r in _rows(capsys.readouterr().out)}
        assert rows["admissible"]["value"] == "true"
        assert float(rows["pairing_value"]["value"]) < 0

    def test_feasible(self):
        assert main(["certify", "--alpha", "0", "--rho", "0.3", "--ring", "3"]) == 0
