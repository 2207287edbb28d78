import csv
import json
import math

import pytest
from click.testing import CliRunner

from vortexdiv import ee
from vortexdiv.cli import main, manifest_path
from vortexdiv.specfun import inv_reg_gamma_p


def write_spectrum(path, modes):
    path.write_text(json.dumps({"modes": [{"n": n, "l": l, "re": re, "im": im}
                                          for n, l, re, im in modes]}))
    return str(path)


@pytest.fixture
def run():
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)
    return invoke


@pytest.fixture
def gauss(tmp_path):
    return write_spectrum(tmp_path / "gauss.json", [(0, 0, 1.0, 0.0)])


@pytest.fixture
def two_mode(tmp_path):
    h = math.sqrt(0.5)
    return write_spectrum(tmp_path / "two.json", [(0, 1, h, 0.0), (1, 1, h, 0.0)])


def test_help_lists_units(run):
    for cmd in ("rms", "cib-sweep", "ee", "minimize", "oracle-check", "profile"):
        res = run(cmd, "--help")
        assert res.exit_code == 0
    assert "[m]" in run("rms", "--help").output


class TestRms:
    def test_lg03(self, run, tmp_path):
        path = write_spectrum(tmp_path / "lg.json", [(0, 3, 1.0, 0.0)])
        rep = json.loads(run("rms", "--spectrum", path).output)
        assert rep["m2_rms"] == pytest.approx(4.0, abs=1e-12)
        assert rep["bound_margin"] == pytest.approx(0.0, abs=1e-12)

    def test_two_mode(self, run, two_mode):
        rep = json.loads(run("rms", "--spectrum", two_mode).output)
        assert rep["m2_rms"] == pytest.approx(math.sqrt(7), abs=1e-12)
        assert rep["bound_margin"] == pytest.approx(math.sqrt(7) - 2, abs=1e-12)

    def test_geometry_and_manifest(self, run, gauss, tmp_path):
        out = tmp_path / "rms.json"
        res = run("rms", "--spectrum", gauss, "--w0", 1e-3, "--lambda", 1e-6, "--out", out)
        assert res.exit_code == 0
        rep = json.loads(out.read_text())
        assert rep["m2_rms"] == pytest.approx(1.0)
        assert rep["sigma_m_m"] == pytest.approx(1e-3 / math.sqrt(2), rel=1e-12)
        man = json.loads(manifest_path(out).read_text())
        assert man["subcommand"] == "rms" and man["output"] == str(out)
        assert man["inputs"] == [gauss]

    def test_malformed_names_entry(self, run, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"modes": [{"n": 0, "l": 0, "re": 1.0}, {"n": -1, "l": 0, "re": 1}]}))
        res = run("rms", "--spectrum", bad)
        assert res.exit_code == 2
        assert "n" in res.output

    def test_missing_file(self, run, tmp_path):
        assert run("rms", "--spectrum", tmp_path / "nope.json").exit_code == 2

    def test_w0_without_lambda(self, run, gauss):
        assert run("rms", "--spectrum", gauss, "--w0", 1e-3).exit_code == 2


class TestCibSweep:
    def test_defaults(self, run, tmp_path):
        out = tmp_path / "cib.csv"
        res = run("cib-sweep", "--out", out, "--verify")
        assert res.exit_code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 2 * 4 * 41
        assert manifest_path(out).exists()

    def test_xi_zero(self, run, tmp_path):
        out = tmp_path / "z.csv"
        run("cib-sweep", "--p", "3,1", "--l", 2, "--xi", 0, "--out", out)
        row = next(csv.DictReader(out.open()))
        assert float(row["m2_rms"]) == 3.0

    def test_partial_failure_recorded(self, run, tmp_path):
        out = tmp_path / "part.csv"
        res = run("cib-sweep", "--p", -1, "--l", 0, "--xi", 0.5, "--xi", 1.0, "--out", out)
        assert res.exit_code == 0
        rows = list(csv.DictReader(out.open()))
        assert rows[1]["m2_rms"] == "nan"
        assert json.loads(manifest_path(out).read_text())["notes"]

    def test_all_rows_fail(self, run, tmp_path):
        res = run("cib-sweep", "--p", -1, "--l", 0, "--xi", 1.0, "--out", tmp_path / "x.csv")
        assert res.exit_code == 2

    def test_bad_complex(self, run, tmp_path):
        assert run("cib-sweep", "--p", "a,b", "--out", tmp_path / "x.csv").exit_code == 2


class TestEE:
    def test_gaussian(self, run, gauss):
        rep = json.loads(run("ee", "--spectrum", gauss).output)
        assert rep["m2_ee"] == pytest.approx(1.0, abs=1e-9)

    def test_lg01(self, run, tmp_path):
        path = write_spectrum(tmp_path / "lg.json", [(0, 1, 1.0, 0.0)])
        rep = json.loads(run("ee", "--spectrum", path).output)
        assert rep["m2_ee"] == pytest.approx(inv_reg_gamma_p(2, ee.E0_DEFAULT), abs=1e-9)

    def test_cib_increases_with_e0(self, run):
        vals = [json.loads(run("ee", "--p", 2, "--xi", 0.5, "--l", 1, "--e0", e0).output)["m2_ee"]
                for e0 in (0.63, 0.86, 0.98)]
        assert vals[0] < vals[1] < vals[2]

    def test_trace(self, run, two_mode, tmp_path):
        tr = tmp_path / "trace.csv"
        assert run("ee", "--spectrum", two_mode, "--trace", tr).exit_code == 0
        rows = list(csv.DictReader(tr.open()))
        assert set(rows[0]) == {"Z", "T", "objective"}
        assert manifest_path(tr).exists()

    def test_bad_e0(self, run, gauss):
        assert run("ee", "--spectrum", gauss, "--e0", 1.5).exit_code == 2

    def test_needs_input(self, run):
        assert run("ee", "--p", 2).exit_code == 2


class TestMinimize:
    ARGS = ("--n-modes", 3, "--restarts", 2, "--max-iters", 200, "--seed", 5)

    def test_single(self, run, tmp_path):
        out = tmp_path / "m.json"
        res = run("minimize", "--l", 1, *self.ARGS, "--out", out)
        assert res.exit_code == 0
        assert "margin over c0+l" in res.output
        d = json.loads(out.read_text())
        assert 1.5 <= d["best_value"] <= ee.m2_ee_lg(0, 1) + 1e-6

    def test_batch_csv(self, run, tmp_path):
        out = tmp_path / "b.csv"
        run("minimize", "--l", 0, "--l", 1, *self.ARGS, "--out", out)
        rows = list(csv.DictReader(out.open()))
        assert [r["l"] for r in rows] == ["0", "1"]
        assert float(rows[1]["c0_plus_l"]) == pytest.approx(1.5)

    def test_byte_identical(self, run, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run("minimize", "--l", 2, *self.ARGS, "--out", a)
        run("minimize", "--l", 2, *self.ARGS, "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_config_error(self, run, tmp_path):
        assert run("minimize", "--l", 0, "--n-modes", 0, "--out", tmp_path / "x").exit_code == 2


class TestOracle:
    def test_gaussian(self, run, gauss, tmp_path):
        out = tmp_path / "o.json"
        res = run("oracle-check", "--spectrum", gauss, "--out", out)
        assert res.exit_code == 0
        assert json.loads(out.read_text())["max_rel_err"] < 1e-6

    def test_two_mode(self, run, two_mode):
        assert run("oracle-check", "--spectrum", two_mode, "--z", 0.0, "--z", 3.0).exit_code == 0

    def test_bad_e0(self, run, gauss):
        assert run("oracle-check", "--spectrum", gauss, "--e0", 0).exit_code == 2


class TestProfileAndReplay:
    def test_profile(self, run, gauss, tmp_path):
        out = tmp_path / "p.csv"
        assert run("profile", "--spectrum", gauss, "--points", 5, "--out", out).exit_code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 5
        peak = 2 / (math.pi * 1e-6)
        assert float(rows[0]["intensity"]) == pytest.approx(peak, rel=1e-12)

    def test_replay_reproduces(self, run, tmp_path):
        out = tmp_path / "r.csv"
        run("cib-sweep", "--p", 2, "--l", 1, "--xi", 0.3, "--xi", 0.7, "--out", out)
        first = out.read_bytes()
        out.unlink()
        res = run("replay", manifest_path(out))
        assert res.exit_code == 0
        assert out.read_bytes() == first

    def test_replay_bad_manifest(self, run, tmp_path):
        bad = tmp_path / "m.json"
        bad.write_text("{}")
        assert run("replay", bad).exit_code == 2
