import csv
import io
import json
import subprocess
import sys

import pytest

from pbn import cli


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code, _ = cli.run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def fixture(name):
    return str(cli._fixture(name))


class TestDie:
    def test_default(self):
        code, out, err = run("die")
        assert code == 0
        rep = json.loads(out)
        assert rep["pass"] is True
        assert rep["outputs"]["mean"] == 3.5
        assert rep["outputs"]["variance_fraction"] == "35/12"
        assert rep["inputs"]["seed"] == 42
        assert err.count("PASS") == len(rep["checks"]) and "FAIL" not in err

    def test_space_file(self):
        code, out, _ = run("die", "--space", fixture("die.json"), "--quiet")
        assert code == 0
        assert json.loads(out)["outputs"]["p_even"] == pytest.approx(0.5, abs=1e-15)

    def test_quiet(self):
        _, _, err = run("die", "--quiet")
        assert err == ""


class TestExpect:
    def test_conditional(self):
        code, out, _ = run("expect", "--space", fixture("die.json"), "--given", "2,4,6", "--quiet")
        rep = json.loads(out)
        assert code == 0
        assert rep["outputs"]["conditional_expectation"] == pytest.approx(4.0, abs=1e-14)

    def test_unknown_label(self):
        code, out, err = run("expect", "--space", fixture("die.json"), "--given", "9")
        assert code == 2 and out == "" and "unknown outcome" in err


class TestEvolve:
    def test_dtmc(self):
        code, out, _ = run("evolve", "--mode", "dtmc", "--matrix", fixture("chain.csv"),
                           "--init", fixture("init.csv"), "--k", "5", "--quiet")
        assert code == 0
        assert sum(json.loads(out)["outputs"]["masses"]) == pytest.approx(1.0, abs=1e-12)

    def test_ctmc(self, tmp_path):
        path = tmp_path / "r.json"
        code, out, _ = run("evolve", "--mode", "ctmc", "--matrix", fixture("generator.csv"),
                           "--t", "2.5", "--report", str(path), "--quiet")
        assert code == 0 and out == ""
        rep = json.loads(path.read_text())
        assert rep["outputs"]["t"] == 2.5
        assert all(c["pass"] for c in rep["checks"])

    def test_missing_time(self):
        code, _, err = run("evolve", "--mode", "ctmc", "--matrix", fixture("generator.csv"), "--k", "3")
        assert code == 2 and "--t" in err

    def test_bad_matrix(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("0.5,0.6\n0.5,0.5\n")
        code, _, _ = run("evolve", "--mode", "dtmc", "--matrix", str(bad), "--k", "1")
        assert code == 2

    def test_missing_file(self, tmp_path):
        code, _, _ = run("evolve", "--mode", "dtmc", "--matrix", str(tmp_path / "nope.csv"), "--k", "1")
        assert code == 2


class TestSimulate:
    def test_csv(self, tmp_path):
        path = tmp_path / "paths.csv"
        code, out, _ = run("simulate", "--process", "wiener", "--T", "1", "--paths", "20",
                           "--steps", "10", "--out", str(path), "--quiet")
        assert code == 0
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["path_id", "t", "value"]
        assert len(rows) - 1 == json.loads(out)["outputs"]["points"] == 20 * 11

    def test_seed_changes_output(self):
        a = run("simulate", "--process", "poisson", "--lambda", "2", "--T", "3", "--paths", "50", "--quiet")[1]
        b = run("simulate", "--process", "poisson", "--lambda", "2", "--T", "3", "--paths", "50",
                "--seed", "7", "--quiet")[1]
        assert json.loads(a)["outputs"]["mean"] != json.loads(b)["outputs"]["mean"]
        assert json.loads(b)["inputs"]["seed"] == 7


class TestKernel:
    def test_compare_closed_form(self):
        code, out, _ = run("kernel", "--m", "1", "--hbar", "1", "--xa", "0", "--ta", "0", "--xb", "0.5",
                           "--tb", "1", "--slices", "4", "--grid", "200", "--compare-closed-form", "--quiet")
        assert code == 0
        assert json.loads(out)["outputs"]["rel_error"] <= 0.02

    def test_failed_check_exits_one(self):
        code, out, err = run("kernel", "--xb", "0.5", "--tb", "1", "--slices", "2", "--grid", "6",
                             "--compare-closed-form")
        assert code == 1
        assert json.loads(out)["pass"] is False
        assert "FAIL" in err

    def test_time_ordering(self):
        code, _, _ = run("kernel", "--xb", "0.5", "--ta", "1", "--tb", "0.5")
        assert code == 2


class TestCluster:
    def test_outputs(self, tmp_path):
        m, c = tmp_path / "R.csv", tmp_path / "clusters.json"
        code, out, _ = run("cluster", "--input", fixture("corpus.tsv"), "--threshold", "0.2",
                           "--matrix-out", str(m), "--clusters-out", str(c), "--quiet")
        assert code == 0
        rep = json.loads(out)
        clusters = json.loads(c.read_text())["clusters"]
        assert clusters == rep["outputs"]["clusters"]
        assert ["q1", "q2"] in clusters
        lines = m.read_text().splitlines()
        docs = lines[0].split(",")[1:]
        assert len(docs) == len(lines) - 1 == rep["outputs"]["n_docs"]
        assert [row.split(",")[0] for row in lines[1:]] == docs

    def test_bad_threshold(self):
        code, _, _ = run("cluster", "--input", fixture("corpus.tsv"), "--threshold", "1.5")
        assert code == 2

    def test_parse_error_line(self, tmp_path):
        bad = tmp_path / "c.tsv"
        bad.write_text("d1\tx\t1\nd2\ty\n")
        code, _, err = run("cluster", "--input", str(bad))
        assert code == 2 and "line 2" in err


class TestCheck:
    def test_all_pass(self):
        code, out, _ = run("check", "--quiet")
        rep = json.loads(out)
        assert code == 0
        assert rep["outputs"]["n_failed"] == 0 and rep["outputs"]["n_checks"] >= 20


class TestContract:
    @pytest.mark.parametrize("argv", [[], ["frobnicate"], ["die", "--bogus"], ["simulate", "--T", "1"]])
    def test_usage_errors(self, argv):
        assert run(*argv)[0] == 2

    @pytest.mark.parametrize("argv", [
        ["die"],
        ["check"],
        ["simulate", "--process", "brownian", "--mu", "0.3", "--T", "2", "--paths", "40"],
    ])
    def test_byte_identical_reports(self, argv):
        assert run(*argv)[1] == run(*argv)[1]

    def test_sorted_keys(self):
        def walk(obj):
            if isinstance(obj, dict):
                assert list(obj) == sorted(obj)
                for v in obj.values():
                    walk(v)
            elif isinstance(obj, list):
                for v in obj:
                    walk(v)

        walk(json.loads(run("check", "--quiet")[1]))

    def test_subprocess(self):
        proc = subprocess.run([sys.executable, "-m", "pbn", "die", "--quiet"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["pass"] is True
        proc = subprocess.run([sys.executable, "-m", "pbn", "nope"], capture_output=True, text=True)
        assert proc.returncode == 2
