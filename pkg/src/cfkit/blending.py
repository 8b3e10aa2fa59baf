"""Stacked ensembling of rating models.

A fraction of the observed ratings trains each base model; the models then
predict the held-out remainder, and those raw (unclipped) predictions become
the feature columns of a small regression dataset whose targets are the true
held-out ratings. A linear combiner (OLS, ridge, or lasso) is fit on that
dataset and applied to base-model predictions at inference time. Clipping to
the rating range happens once, at output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, clone

from .data import RatingMatrix, split_ratings
from .errors import CfkitError, ConfigError, NumericError

METHODS = ("ols", "ridge", "lasso")

LASSO_TOL = 1e-8
LASSO_MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class BlendDataset:
    """Held-out base-model predictions (columns) with true ratings as targets."""

    features: np.ndarray
    targets: np.ndarray
    model_names: tuple[str, ...]
    split_seed: int

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.targets, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-d, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError(f"targets shape {y.shape} does not match {X.shape[0]} rows")
        if X.shape[1] != len(self.model_names):
            raise ValueError(
                f"{X.shape[1]} feature columns but {len(self.model_names)} model names"
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("blend dataset contains non-finite values")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "model_names", tuple(str(n) for n in self.model_names))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_models(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class BlendModel:
    intercept: float
    weights: np.ndarray
    method: str
    alpha: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError(f"weights must be 1-d, got shape {w.shape}")
        if not (np.isfinite(self.intercept) and np.all(np.isfinite(w))):
            raise ValueError("blend model has non-finite coefficients")
        object.__setattr__(self, "weights", w)


def _predict_pairs(estimator, users: np.ndarray, items: np.ndarray) -> np.ndarray:
    pred = np.asarray(estimator.predict((users, items)), dtype=np.float64)
    if pred.shape != users.shape:
        raise ValueError(f"model returned {pred.shape} predictions for {users.shape} pairs")
    return pred


def blend_base_predictions(
    m: RatingMatrix,
    models,
    fraction: float = 0.8,
    seed: int = 0,
    queries: tuple[np.ndarray, np.ndarray] | None = None,
    refit_full: bool = False,
) -> tuple[BlendDataset, np.ndarray | None]:
    """Fit every base model on a split of m and collect held-out predictions.

    models is a sequence of (name, estimator) pairs; estimators are cloned
    before fitting. With queries, each model also predicts those extra pairs
    in the same pass (same fit, one predict call) and the per-model columns
    are returned alongside the dataset. refit_full retrains each model on all
    of m before predicting the queries instead of reusing the split fit.
    """
    models = list(models)
    if not models:
        raise ConfigError("blending needs at least one base model")
    names = [str(name) for name, _ in models]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate blend model names: {sorted(names)}")

    split = split_ratings(m, fraction, seed)
    val = split.validation
    users = val.users
    items = val.items
    if queries is not None:
        q_users = np.asarray(queries[0], dtype=np.int64)
        q_items = np.asarray(queries[1], dtype=np.int64)
        all_users = np.concatenate([users, q_users])
        all_items = np.concatenate([items, q_items])
    else:
        all_users, all_items = users, items

    columns = []
    q_columns = []
    for name, estimator in models:
        try:
            fitted = clone(estimator).fit(split.train)
            pred = _predict_pairs(fitted, all_users, all_items)
            if queries is not None and refit_full:
                refit = clone(estimator).fit(m)
                q_pred = _predict_pairs(refit, q_users, q_items)
            elif queries is not None:
                q_pred = pred[users.size:]
            else:
                q_pred = None
        except CfkitError as exc:
            raise type(exc)(f"blend model {name!r}: {exc}") from exc
        columns.append(pred[: users.size])
        if q_pred is not None:
            q_columns.append(q_pred)

    dataset = BlendDataset(np.column_stack(columns), val.values, tuple(names), seed)
    query_features = np.column_stack(q_columns) if queries is not None else None
    return dataset, query_features


def make_blend_dataset(
    m: RatingMatrix, models, fraction: float = 0.8, seed: int = 0
) -> BlendDataset:
    """Split m, train the (name, estimator) pairs on the train part, and
    assemble their validation-part predictions into a BlendDataset."""
    dataset, _ = blend_base_predictions(m, models, fraction, seed)
    return dataset


def _fit_ols(X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    A = np.column_stack([np.ones(X.shape[0]), X])
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        raise NumericError(
            "rank-deficient blend design (collinear model columns); use method='ridge'"
        )
    return float(coef[0]), coef[1:]


def _fit_ridge(X: np.ndarray, y: np.ndarray, alpha: float) -> tuple[float, np.ndarray]:
    # intercept unpenalized: center, solve (Xc'Xc + alpha I) w = Xc'y
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    w = np.linalg.solve(Xc.T @ Xc + alpha * np.eye(X.shape[1]), Xc.T @ (y - y_mean))
    return float(y_mean - x_mean @ w), w


def _fit_lasso(X: np.ndarray, y: np.ndarray, alpha: float) -> tuple[float, np.ndarray]:
    # objective (1 / 2n) ||y - b - Xw||^2 + alpha ||w||_1, intercept unpenalized
    n, p = X.shape
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    col_sq = (Xc * Xc).sum(axis=0) / n
    w = np.zeros(p)
    resid = yc.copy()
    for _ in range(LASSO_MAX_SWEEPS):
        max_change = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            old = w[j]
            rho = (Xc[:, j] @ resid) / n + col_sq[j] * old
            new = np.sign(rho) * max(abs(rho) - alpha, 0.0) / col_sq[j]
            if new != old:
                resid -= Xc[:, j] * (new - old)
                w[j] = new
                max_change = max(max_change, abs(new - old))
        if max_change < LASSO_TOL:
            break
    return float(y_mean - x_mean @ w), w


def fit_blender(d: BlendDataset, method: str = "ols", alpha: float = 0.0) -> BlendModel:
    """Fit a linear combiner on a blend dataset.

    ols ignores alpha; ridge and lasso penalize the weights but never the
    intercept, with lasso solved by coordinate descent.
    """
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    if alpha < 0.0:
        raise ConfigError(f"alpha must be >= 0, got {alpha}")
    if d.n_rows <= d.n_models:
        raise ConfigError(
            f"need more blend rows than models, got {d.n_rows} rows for {d.n_models} models"
        )
    X, y = d.features, d.targets
    if method == "ols":
        intercept, w = _fit_ols(X, y)
    elif method == "ridge":
        intercept, w = _fit_ridge(X, y, alpha)
    else:
        intercept, w = _fit_lasso(X, y, alpha)
    return BlendModel(intercept, w, method, alpha)


def blend_predict(b: BlendModel, model_predictions) -> float | np.ndarray:
    """intercept + weights . predictions; rows of a 2-d input blend row-wise."""
    P = np.asarray(model_predictions, dtype=np.float64)
    if P.shape[-1:] != b.weights.shape:
        raise ValueError(
            f"expected {b.weights.size} model predictions, got shape {P.shape}"
        )
    out = b.intercept + P @ b.weights
    return float(out) if P.ndim == 1 else out


class LinearBlender(BaseEstimator):
    """Estimator wrapper: X is the (rows, models) base-prediction matrix."""

    def __init__(self, method="ols", alpha=0.0, model_names=None):
        self.method = method
        self.alpha = alpha
        self.model_names = model_names

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        names = self.model_names
        if names is None:
            names = tuple(f"m{j}" for j in range(X.shape[1]))
        d = BlendDataset(X, y, tuple(names), split_seed=0)
        self.model_ = fit_blender(d, self.method, self.alpha)
        return self

    def predict(self, X):
        return np.asarray(blend_predict(self.model_, np.asarray(X, dtype=np.float64)))


def write_blend_csv(d: BlendDataset, sink) -> None:
    """CSV with one column per model plus `target`, full float precision."""
    close = False
    if not hasattr(sink, "write"):
        sink = open(sink, "w", newline="")
        close = True
    try:
        writer = csv.writer(sink)
        writer.writerow(list(d.model_names) + ["target"])
        for row, t in zip(d.features, d.targets):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(t))])
    finally:
        if close:
            sink.close()


def read_blend_csv(source, split_seed: int = 0) -> BlendDataset:
    close = False
    if not hasattr(source, "read"):
        source = open(source, "r", newline="")
        close = True
    try:
        reader = csv.reader(source)
        header = next(reader, None)
        if not header or header[-1] != "target":
            raise ConfigError("blend CSV must end with a 'target' column")
        names = tuple(header[:-1])
        rows = [[float(v) for v in row] for row in reader if row]
    finally:
        if close:
            source.close()
    data = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(names) + 1)
    return BlendDataset(data[:, :-1], data[:, -1], names, split_seed)
