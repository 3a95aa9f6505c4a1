import dataclasses
import json

import numpy as np
import pytest

from fcar import FunctionalSeries, center, make_uniform_grid, trapz
from fcar.covariance import cov_matrix, cross_cov_matrix, estimate, solve_spd
from fcar.exceptions import DataError, InvalidArgumentError, SingularMatrixError, UnsupportedError
from fcar.forecast import (
    FCARModel,
    exact_predict,
    fit,
    forecast,
    load_model,
    naive_predict,
    parse_p_rule,
    predict,
    save_model,
)
from fcar.simulate import SimConfig, simulate

from helpers import random_series


@pytest.fixture(scope="module")
def ou_long():
    return simulate(SimConfig("ou", 2000, 101, seed=0))


def alternating(g=6):
    grid = make_uniform_grid(g)
    return FunctionalSeries(grid, np.outer([1.0, -1.0, 1.0, -1.0], np.ones(g)))


class TestPRule:
    @pytest.mark.parametrize("rule,want", [("kmeans", ("kmeans", None)), ("cv", ("cv", None)), (3, ("fixed", 3)), ("fixed:2", ("fixed", 2))])
    def test_parse(self, rule, want):
        assert parse_p_rule(rule) == want

    @pytest.mark.parametrize("rule", ["median", "fixed:x", 0, "fixed:0", True, None])
    def test_bad(self, rule):
        with pytest.raises(InvalidArgumentError):
            parse_p_rule(rule)


class TestFit:
    def test_ou_coefficient(self, ou_long):
        series, _ = ou_long
        model = fit(series, 1, "fixed:1")
        s = series.grid.points
        assert model.points[0].abscissa == 1.0
        assert np.max(np.abs(model.alpha[:, 0] - np.exp(-s))) <= 0.05

    def test_alternating_hand(self):
        model = fit(alternating(), 1, 1)
        np.testing.assert_allclose(model.alpha, -1.0, atol=1e-12)
        # after z4 = -1 the next value is +1
        np.testing.assert_allclose(predict(model, -np.ones(6), uncenter=False), 1.0, atol=1e-12)

    def test_all_zero(self):
        with pytest.raises(SingularMatrixError):
            fit(FunctionalSeries(make_uniform_grid(5), np.zeros((10, 5))), 1, 1)

    def test_too_short(self):
        with pytest.raises(InvalidArgumentError):
            fit(alternating().slice(0, 2), 1, 1)

    def test_fixed_beyond_trace(self):
        # rank-one data supports a single point
        with pytest.raises(InvalidArgumentError):
            fit(alternating(), 1, 3)

    def test_alpha_reproduced_from_covariances(self, rng):
        raw = random_series(rng, m=80, centered=False)
        model = fit(raw, 2, "fixed:4")
        cov = estimate(center(raw)[0], 2)
        sol, _ = solve_spd(cov_matrix(cov, model.points), cross_cov_matrix(cov, model.points).T)
        np.testing.assert_allclose(model.alpha, sol.T, atol=1e-10)

    @pytest.mark.parametrize("rule", ["kmeans", "cv", "fixed:2"])
    def test_p_hat_bounded(self, rng, rule):
        model = fit(random_series(rng, m=80, centered=False), 1, rule, p_max=6)
        assert 1 <= model.p_hat == model.n_points <= len(model.trace)

    def test_no_center(self, rng):
        raw = random_series(rng, m=40, centered=False)
        model = fit(raw, 1, 2, center_data=False)
        assert not np.any(model.mean_curve)

    def test_in_sample_optimality(self, rng):
        series = random_series(rng, m=80)
        model = fit(series, 1, "fixed:3")
        x = series.values
        inputs = x[:-1][:, model.points.indices]

        def sse(alpha):
            r = x[1:] - inputs @ alpha.T
            return trapz((r * r).sum(axis=0), series.grid)

        best = sse(model.alpha)
        for _ in range(100):
            assert best <= sse(model.alpha + 0.01 * rng.standard_normal(model.alpha.shape)) + 1e-12


class TestPredict:
    def test_zero_alpha_gives_mean(self, rng):
        model = fit(random_series(rng, m=40, centered=False), 1, 2)
        zero = dataclasses.replace(model, alpha=np.zeros_like(model.alpha))
        np.testing.assert_array_equal(predict(zero, rng.standard_normal(51)), model.mean_curve)

    def test_ou_prediction(self, ou_long):
        series, _ = ou_long
        model = fit(series, 1, 1)
        s = series.grid.points
        for i in (10, 500, 1999):
            prev = series.values[i] - model.mean_curve
            got = predict(model, prev, uncenter=False)
            assert np.max(np.abs(got - np.exp(-s) * prev[-1])) <= 0.05 * np.max(np.abs(prev))

    def test_linearity(self, rng):
        model = fit(random_series(rng, m=60), 2, "fixed:4")
        u, v = rng.standard_normal((2, 2, 51))
        a, b = 1.7, -0.3
        lhs = predict(model, a * u + b * v, uncenter=False)
        rhs = a * predict(model, u, uncenter=False) + b * predict(model, v, uncenter=False)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_lag_mapping(self, rng):
        model = fit(random_series(rng, m=60), 2, "fixed:4")
        recent = rng.standard_normal((2, 51))
        want = sum(model.alpha[:, j] * recent[c.lag - 1, c.index] for j, c in enumerate(model.points))
        np.testing.assert_allclose(predict(model, recent, uncenter=False), want, atol=1e-14)

    def test_shape_errors(self, rng):
        model = fit(random_series(rng, m=60), 2, 2)
        with pytest.raises(InvalidArgumentError):
            predict(model, np.zeros(50))
        with pytest.raises(InvalidArgumentError):
            predict(model, np.zeros((1, 51)))  # needs two past curves

    def test_iterated_forecast(self, rng):
        series = random_series(rng, m=60, centered=False)
        model = fit(series, 1, 2)
        out = forecast(model, series.values, 3)
        assert out.shape == (3, 51)
        np.testing.assert_allclose(out[0], predict(model, series.values[-1]))
        np.testing.assert_allclose(out[1], predict(model, out[0]))
        with pytest.raises(InvalidArgumentError):
            forecast(model, series.values, 0)


class TestBaselines:
    def test_naive_identity(self, rng):
        c = rng.standard_normal(7)
        np.testing.assert_array_equal(naive_predict(c), c)
        np.testing.assert_array_equal(naive_predict(np.vstack([c, c + 1])), c)

    def test_naive_periodic(self):
        x = np.tile(np.sin(np.linspace(0, 3, 9)), (5, 1))
        assert all(np.array_equal(naive_predict(x[i - 1]), x[i]) for i in range(1, 5))

    def test_naive_ou_positive(self, ou_long):
        x = ou_long[0].values
        errs = np.abs(x[1:] - x[:-1]).max(axis=1)
        assert np.all(errs > 0)

    def test_exact_sparse_log(self):
        series, kernel = simulate(SimConfig("sparse-log", 60, 101, seed=2))
        s = series.grid.points
        prev = series.values[10]
        want = sum(np.log((1 + s) / j) * prev[series.grid.index_of(t)] for j, t in enumerate((0.3, 0.5, 0.9), 1))
        np.testing.assert_allclose(exact_predict(kernel, prev), want, atol=1e-14)
        # the recursion itself: next curve = exact prediction + innovation with zero start
        assert exact_predict(kernel, prev)[0] == pytest.approx(series.values[11][0], abs=1e-12)

    def test_exact_ou(self, ou_long):
        series, kernel = ou_long
        prev = series.values[3]
        np.testing.assert_allclose(exact_predict(kernel, prev), np.exp(-series.grid.points) * prev[-1], atol=1e-15)

    def test_exact_zero(self, ou_long):
        assert not np.any(exact_predict(ou_long[1], np.zeros(101)))

    def test_exact_without_kernel(self):
        with pytest.raises(UnsupportedError):
            exact_predict(None, np.zeros(5))
        far = simulate(SimConfig("far", 60, 21, seed=0))[1]
        with pytest.raises(UnsupportedError):
            exact_predict(far, np.zeros(21))


class TestSerialization:
    def test_round_trip(self, rng, tmp_path):
        model = fit(random_series(rng, m=60, centered=False), 2, "kmeans")
        path = tmp_path / "m.json"
        save_model(model, path)
        back = load_model(path)
        assert back.points.delta == model.points.delta
        assert back.points.candidates == model.points.candidates
        np.testing.assert_array_equal(back.alpha, model.alpha)
        np.testing.assert_array_equal(back.mean_curve, model.mean_curve)
        np.testing.assert_array_equal(back.trace.gains, model.trace.gains)
        assert back.trace.chosen == model.trace.chosen
        assert (back.q, back.p_hat, back.p_rule) == (model.q, model.p_hat, model.p_rule)
        x = rng.standard_normal((2, 51))
        np.testing.assert_array_equal(predict(back, x), predict(model, x))

    def test_document_is_self_describing(self, rng):
        doc = fit(random_series(rng, m=40, centered=False), 1, 2).to_dict()
        assert doc["format"] == "fcar-model"
        for key in ("grid", "points", "alpha", "mean_curve", "q", "provenance"):
            assert key in doc
        json.dumps(doc)

    @pytest.mark.parametrize("text", ["not json", "{}", '{"format": "fcar-model", "version": 1}'])
    def test_bad_files(self, tmp_path, text):
        p = tmp_path / "bad.json"
        p.write_text(text)
        with pytest.raises(DataError):
            load_model(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_model(tmp_path / "none.json")

    def test_from_dict_type(self):
        with pytest.raises(DataError):
            FCARModel.from_dict({"format": "other"})
