import io

import numpy as np
import pytest
from sklearn.base import BaseEstimator, clone
from sklearn.linear_model import Lasso, Ridge

from cfkit.blending import (
    BlendDataset,
    BlendModel,
    LinearBlender,
    blend_base_predictions,
    blend_predict,
    fit_blender,
    make_blend_dataset,
    read_blend_csv,
    write_blend_csv,
)
from cfkit.data import rmse_values, split_ratings
from cfkit.errors import ConfigError, NumericError
from cfkit.factorization import SVDBaseline
from cfkit.similarity import SimilarityKNN

BASES = (("svd", SVDBaseline(rank=2)), ("knn", SimilarityKNN(axis="item")))


def _toy_dataset(seed=0, rows=40, cols=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, cols))
    y = 1.5 + X @ np.linspace(0.2, 0.8, cols) + 0.1 * rng.normal(size=rows)
    return BlendDataset(X, y, tuple(f"m{j}" for j in range(cols)), split_seed=0)


def test_dataset_from_models(noisy_rank3):
    d = make_blend_dataset(noisy_rank3, BASES, fraction=0.8, seed=3)
    val = split_ratings(noisy_rank3, 0.8, 3).validation
    assert d.features.shape == (val.n_entries, 2)
    assert d.model_names == ("svd", "knn")
    np.testing.assert_array_equal(d.targets, val.values)
    again = make_blend_dataset(noisy_rank3, BASES, fraction=0.8, seed=3)
    np.testing.assert_array_equal(d.features, again.features)


def test_query_features(noisy_rank3):
    queries = (np.array([0, 1, 2]), np.array([5, 6, 7]))
    d, qf = blend_base_predictions(noisy_rank3, BASES, seed=1, queries=queries)
    assert qf.shape == (3, 2)
    d_only, none_qf = blend_base_predictions(noisy_rank3, BASES, seed=1)
    assert none_qf is None
    np.testing.assert_array_equal(d.features, d_only.features)


def test_refit_full_retrains_for_queries(noisy_rank3):
    queries = (np.array([0, 1, 2]), np.array([5, 6, 7]))
    d_a, qf_split = blend_base_predictions(noisy_rank3, BASES, seed=1, queries=queries)
    d_b, qf_full = blend_base_predictions(
        noisy_rank3, BASES, seed=1, queries=queries, refit_full=True
    )
    np.testing.assert_array_equal(d_a.features, d_b.features)
    assert not np.array_equal(qf_split, qf_full)


class _FailingModel(BaseEstimator):
    def fit(self, X, y=None):
        raise NumericError("boom")

    def predict(self, X):
        raise AssertionError("unreachable")


def test_failure_names_the_model(noisy_rank3):
    with pytest.raises(NumericError, match="blend model 'bad'"):
        make_blend_dataset(noisy_rank3, [("bad", _FailingModel())])


def test_model_list_validation(noisy_rank3):
    with pytest.raises(ConfigError, match="at least one"):
        make_blend_dataset(noisy_rank3, [])
    with pytest.raises(ConfigError, match="duplicate"):
        make_blend_dataset(noisy_rank3, [("svd", SVDBaseline()), ("svd", SVDBaseline())])


def test_dataset_validation():
    X = np.ones((4, 2))
    y = np.ones(4)
    with pytest.raises(ValueError, match="2-d"):
        BlendDataset(np.ones(4), y, ("a",), 0)
    with pytest.raises(ValueError, match="targets"):
        BlendDataset(X, np.ones(3), ("a", "b"), 0)
    with pytest.raises(ValueError, match="model names"):
        BlendDataset(X, y, ("a",), 0)
    with pytest.raises(ValueError, match="non-finite"):
        BlendDataset(X * np.nan, y, ("a", "b"), 0)


def test_single_perfect_column_recovered():
    y = np.linspace(1.0, 5.0, 10)
    d = BlendDataset(y[:, None], y, ("exact",), split_seed=0)
    b = fit_blender(d, "ols")
    assert b.intercept == pytest.approx(0.0, abs=1e-10)
    assert b.weights[0] == pytest.approx(1.0, abs=1e-10)
    assert rmse_values(blend_predict(b, d.features), y) < 1e-8


def test_ols_collinear_columns_raise():
    y = np.linspace(1.0, 5.0, 10)
    d = BlendDataset(np.column_stack([y, y]), y, ("a", "b"), split_seed=0)
    with pytest.raises(NumericError, match="ridge"):
        fit_blender(d, "ols")


def test_ridge_matches_reference_solver():
    d = _toy_dataset(seed=1)
    b = fit_blender(d, "ridge", alpha=0.7)
    ref = Ridge(alpha=0.7).fit(d.features, d.targets)
    assert b.intercept == pytest.approx(ref.intercept_, abs=1e-8)
    np.testing.assert_allclose(b.weights, ref.coef_, atol=1e-8)


def test_lasso_matches_reference_solver():
    d = _toy_dataset(seed=2)
    b = fit_blender(d, "lasso", alpha=0.05)
    ref = Lasso(alpha=0.05, tol=1e-12, max_iter=200_000).fit(d.features, d.targets)
    assert b.intercept == pytest.approx(ref.intercept_, abs=1e-6)
    np.testing.assert_allclose(b.weights, ref.coef_, atol=1e-6)


def test_ridge_shrinks_with_alpha():
    d = _toy_dataset(seed=3)
    small = fit_blender(d, "ridge", alpha=0.1)
    large = fit_blender(d, "ridge", alpha=10.0)
    assert np.linalg.norm(large.weights) < np.linalg.norm(small.weights)


def test_lasso_large_alpha_zeroes_weights():
    d = _toy_dataset(seed=4)
    b = fit_blender(d, "lasso", alpha=1e3)
    np.testing.assert_array_equal(b.weights, 0.0)
    assert b.intercept == pytest.approx(d.targets.mean(), abs=1e-12)


def test_ols_never_worse_than_best_column():
    d = _toy_dataset(seed=5, rows=60, cols=4)
    b = fit_blender(d, "ols")
    blend_rmse = rmse_values(blend_predict(b, d.features), d.targets)
    col_rmse = min(
        rmse_values(d.features[:, j], d.targets) for j in range(d.n_models)
    )
    assert blend_rmse <= col_rmse + 1e-12


def test_ols_recovers_exact_linear_combination():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(30, 2))
    y = 1.5 + X @ np.array([0.3, 0.7])
    d = BlendDataset(X, y, ("a", "b"), split_seed=0)
    b = fit_blender(d, "ols")
    assert b.intercept == pytest.approx(1.5, abs=1e-8)
    np.testing.assert_allclose(b.weights, [0.3, 0.7], atol=1e-8)


def test_blend_predict_values():
    b = BlendModel(intercept=0.0, weights=np.array([0.5, 0.5]), method="ols", alpha=0.0)
    assert blend_predict(b, np.array([3.0, 4.0])) == pytest.approx(3.5)
    out = blend_predict(b, np.array([[3.0, 4.0], [5.0, 1.0]]))
    np.testing.assert_allclose(out, [3.5, 3.0])
    only = BlendModel(intercept=2.5, weights=np.zeros(2), method="ols", alpha=0.0)
    assert blend_predict(only, np.array([9.0, 9.0])) == pytest.approx(2.5)
    with pytest.raises(ValueError, match="model predictions"):
        blend_predict(b, np.array([1.0, 2.0, 3.0]))


def test_fit_blender_validation():
    d = _toy_dataset()
    with pytest.raises(ConfigError, match="method"):
        fit_blender(d, "huber")
    with pytest.raises(ConfigError, match="alpha"):
        fit_blender(d, "ridge", alpha=-1.0)
    tiny = BlendDataset(np.ones((2, 2)), np.ones(2), ("a", "b"), 0)
    with pytest.raises(ConfigError, match="more blend rows"):
        fit_blender(tiny, "ridge", alpha=1.0)


def test_blend_model_validation():
    with pytest.raises(ValueError, match="1-d"):
        BlendModel(0.0, np.ones((2, 2)), "ols", 0.0)
    with pytest.raises(ValueError, match="non-finite"):
        BlendModel(np.nan, np.ones(2), "ols", 0.0)


def test_csv_round_trip(tmp_path):
    d = _toy_dataset(seed=7)
    buf = io.StringIO()
    write_blend_csv(d, buf)
    back = read_blend_csv(io.StringIO(buf.getvalue()))
    np.testing.assert_array_equal(back.features, d.features)
    np.testing.assert_array_equal(back.targets, d.targets)
    assert back.model_names == d.model_names

    path = tmp_path / "blend.csv"
    write_blend_csv(d, path)
    from_file = read_blend_csv(path)
    np.testing.assert_array_equal(from_file.features, d.features)

    with pytest.raises(ConfigError, match="target"):
        read_blend_csv(io.StringIO("a,b\n1.0,2.0\n"))


def test_linear_blender_estimator():
    d = _toy_dataset(seed=8)
    est = LinearBlender(method="ridge", alpha=0.5).fit(d.features, d.targets)
    direct = fit_blender(d, "ridge", alpha=0.5)
    assert est.model_.intercept == pytest.approx(direct.intercept)
    np.testing.assert_allclose(est.model_.weights, direct.weights)
    np.testing.assert_allclose(
        est.predict(d.features), blend_predict(direct, d.features)
    )
    assert clone(est).get_params() == est.get_params()
