import json

import numpy as np
import pytest

from fcar.cli import main
from fcar.forecast import load_model
from fcar.io import read_series, write_series
from fcar.simulate import SimConfig, simulate


@pytest.fixture
def run(capsys):
    def _run(*argv):
        code = main([str(a) for a in argv])
        out = capsys.readouterr()
        return code, out.out, out.err

    return _run


@pytest.fixture
def ou_file(tmp_path, run):
    path = tmp_path / "ou.csv"
    assert run("simulate", "--family", "ou", "--theta", 1, "--m", 500, "--grid", 101, "--seed", 7, "--out", path)[0] == 0
    return path


@pytest.fixture
def sl_file(tmp_path, run):
    path = tmp_path / "sl.csv"
    assert run("simulate", "--family", "sparse-log", "--m", 115, "--out", path)[0] == 0
    return path


class TestSimulate:
    def test_ou(self, ou_file):
        s = read_series(ou_file)
        assert s.values.shape == (500, 101)
        doc = json.loads(ou_file.with_name("ou.kernel.json").read_text())
        assert doc["family"] == "ou" and doc["seed"] == 7
        assert doc["operator_norms"][0] == pytest.approx(1.0)

    def test_round_trip_matches_memory(self, ou_file):
        mem, _ = simulate(SimConfig("ou", 500, 101, seed=7))
        assert np.array_equal(read_series(ou_file).values, mem.values)

    def test_sparse_descriptor(self, sl_file):
        doc = json.loads(sl_file.with_name("sl.kernel.json").read_text())
        assert [p["abscissa"] for p in doc["points"]] == pytest.approx([0.3, 0.5, 0.9])

    def test_far_descriptor(self, tmp_path, run):
        path = tmp_path / "far.csv"
        assert run("simulate", "--family", "far", "--m", 20, "--grid", 21, "--D", 5, "--out", path)[0] == 0
        doc = json.loads((tmp_path / "far.kernel.json").read_text())
        assert np.array(doc["psi"]).shape == (5, 5)

    def test_invalid_family(self, tmp_path, run):
        code, _, err = run("simulate", "--family", "gauss", "--m", 5, "--out", tmp_path / "x.csv")
        assert code == 2 and "invalid choice" in err

    def test_missing_required(self, run):
        assert run("simulate", "--family", "ou")[0] == 2

    def test_bad_value(self, tmp_path, run):
        assert run("simulate", "--family", "far", "--m", 5, "--kappa", 2, "--out", tmp_path / "x.csv")[0] == 3

    def test_reproducible(self, tmp_path, run):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            run("simulate", "--family", "sparse-sin", "--m", 60, "--seed", 3, "--out", p)
        assert a.read_bytes() == b.read_bytes()


class TestSelect:
    def test_ou_report(self, ou_file, tmp_path, run):
        model_path = tmp_path / "m.json"
        code, out, _ = run("select", ou_file, "--q", 1, "--model-out", model_path)
        assert code == 0
        first = [l for l in out.splitlines() if l.strip().startswith("1 ")][0].split()
        assert float(first[2]) == 1.0
        assert "p_hat (kmeans)" in out and "p_hat (cv" in out
        assert load_model(model_path).points[0].abscissa == 1.0

    def test_fixed_three(self, sl_file, run):
        code, out, _ = run("select", sl_file, "--p-rule", "fixed:3")
        assert code == 0
        kept = [l for l in out.splitlines() if l.startswith("  lag ")]
        assert len(kept) == 3

    def test_duplicated_constant_column(self, sl_file, tmp_path, run):
        s = read_series(sl_file)
        v = s.values.copy()
        v[:, 40] = 2.0
        v[:, 41] = 2.0
        path = tmp_path / "dup.csv"
        write_series(path, v, s.grid)
        code, out, _ = run("select", path)
        total = int([l for l in out.splitlines() if l.startswith("skipped candidates")][0].split()[-1])
        assert code == 0 and total > 0

    def test_report_file(self, sl_file, tmp_path, run):
        rep = tmp_path / "r.txt"
        _, out, _ = run("select", sl_file, "--report", rep)
        assert rep.read_text() == out

    def test_config_precedence(self, sl_file, tmp_path, run):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("# defaults\np-rule = fixed:2\np_max = 5\ncenter = yes\n")
        _, out, _ = run("select", sl_file, "--config", cfg)
        assert "rule fixed:2" in out and "p_max = 5" in out
        _, out, _ = run("select", sl_file, "--config", cfg, "--p-rule", "fixed:1")
        assert "rule fixed:1" in out

    @pytest.mark.parametrize("text", ["bogus = 1\n", "p_max = many\n", "center = maybe\n", "no equals sign\n"])
    def test_bad_config(self, sl_file, tmp_path, run, text):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(text)
        assert run("select", sl_file, "--config", cfg)[0] == 2

    def test_no_center(self, sl_file, tmp_path, run):
        model_path = tmp_path / "m.json"
        assert run("select", sl_file, "--no-center", "--model-out", model_path)[0] == 0
        assert not np.any(load_model(model_path).mean_curve)

    def test_data_error(self, tmp_path, run):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2\n3,oops\n")
        code, _, err = run("select", bad)
        assert code == 3 and "bad.csv:2" in err

    def test_numerical_error(self, tmp_path, run):
        z = tmp_path / "z.csv"
        z.write_text("0,0,0\n0,0,0\n0,0,0\n0,0,0\n")
        assert run("select", z)[0] == 4

    def test_bad_rule(self, sl_file, run):
        assert run("select", sl_file, "--p-rule", "median")[0] == 3


class TestForecast:
    def test_one_step_matches_library(self, ou_file, tmp_path, run):
        from fcar.forecast import predict

        model_path, out_path = tmp_path / "m.json", tmp_path / "f.csv"
        run("select", ou_file, "--model-out", model_path)
        assert run("forecast", model_path, ou_file, "--out", out_path)[0] == 0
        got = np.loadtxt(out_path, delimiter=",", skiprows=1, ndmin=2)
        model = load_model(model_path)
        np.testing.assert_array_equal(got[0], predict(model, read_series(ou_file).values[-1]))

    def test_steps_to_stdout(self, ou_file, tmp_path, run):
        model_path = tmp_path / "m.json"
        run("select", ou_file, "--model-out", model_path)
        code, out, _ = run("forecast", model_path, ou_file, "--steps", 3)
        assert code == 0 and len(out.strip().splitlines()) == 4

    def test_grid_mismatch(self, ou_file, sl_file, tmp_path, run):
        model_path = tmp_path / "m.json"
        run("select", ou_file, "--model-out", model_path)
        s = read_series(sl_file)
        coarse = tmp_path / "c.csv"
        write_series(coarse, s.values[:, ::2], None)
        assert run("forecast", model_path, coarse)[0] == 3

    def test_missing_model(self, ou_file, tmp_path, run):
        assert run("forecast", tmp_path / "none.json", ou_file)[0] == 3


class TestBenchmark:
    def test_file_with_exact(self, sl_file, tmp_path, run):
        out, timing = tmp_path / "r.csv", tmp_path / "t.csv"
        code, _, _ = run("benchmark", sl_file, "--methods", "rkhs-kmeans,naive,exact", "--out", out, "--timing-out", timing)
        assert code == 0
        rows = {l.split(",")[0]: l.split(",") for l in out.read_text().splitlines()[1:]}
        assert set(rows) == {"rkhs-kmeans", "naive", "exact"}
        assert float(rows["exact"][1]) <= float(rows["naive"][1])
        assert len(timing.read_text().splitlines()) == 4

    def test_family_replications(self, tmp_path, run):
        js = tmp_path / "r.json"
        code, out, _ = run("benchmark", "--family", "ou", "--reps", 2, "--threads", 2, "--methods", "rkhs-cv,naive", "--json", js)
        assert code == 0 and out.startswith("2 window(s)")
        assert set(json.loads(js.read_text())["errors"]) == {"rkhs-cv", "naive"}

    def test_seeded_reproducible(self, tmp_path, run):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            run("benchmark", "--family", "sparse-log", "--seed", 4, "--methods", "rkhs-kmeans,exact", "--out", p)
        assert a.read_text() == b.read_text()

    def test_exact_without_descriptor(self, sl_file, tmp_path, run):
        plain = tmp_path / "plain.csv"
        plain.write_bytes(sl_file.read_bytes())
        assert run("benchmark", plain, "--methods", "exact")[0] == 3

    def test_exact_far_descriptor(self, tmp_path, run):
        path = tmp_path / "far.csv"
        run("simulate", "--family", "far", "--m", 115, "--grid", 21, "--out", path)
        assert run("benchmark", path, "--methods", "exact")[0] == 3

    def test_needs_one_source(self, sl_file, run):
        assert run("benchmark")[0] == 2
        assert run("benchmark", sl_file, "--family", "ou")[0] == 2

    def test_unknown_method(self, sl_file, run):
        assert run("benchmark", sl_file, "--methods", "oracle")[0] == 3


class TestKernelApprox:
    def test_sparse_log(self, tmp_path, run):
        out = tmp_path / "d.csv"
        assert run("kernel-approx", "sparse-log", "--p-max", 4, "--out", out)[0] == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "s,p1,p2,p3,p4"
        mat = np.array([[float(v) for v in l.split(",")] for l in lines[1:]])
        assert mat.shape == (101, 5)
        assert np.max(mat[:, 3]) <= 1e-8

    def test_stdout_quantile(self, run):
        code, out, _ = run("kernel-approx", "phi1", "--p-max", 2, "--design", "quantile", "--s-points", 5)
        assert code == 0 and len(out.splitlines()) == 6

    def test_unknown_kernel(self, run):
        code, _, err = run("kernel-approx", "phi9")
        assert code == 2 and "phi9" in err


def test_no_command(run):
    assert run()[0] == 2


def test_version(run):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
