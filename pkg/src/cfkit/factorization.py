"""Matrix factorization models sharing one (U, V, normalization) representation.

All trainers operate on column-normalized ratings by default and store the
normalization state inside the model, so a prediction for (u, i) is always
denormalize(U[u] . V[:, i], column i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .base import RatingEstimator
from .data import NormalizationState, RatingMatrix, normalize_ratings, rmse_values
from .errors import ConfigError, NumericError, ParseError

_MODEL_MAGIC = "cfkit-factor-model"
_MODEL_VERSION = 1


@dataclass
class FactorModel:
    """Rank-k factorization U (n_users x k) times V (k x n_items)."""

    U: np.ndarray
    V: np.ndarray
    norm: NormalizationState

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    @property
    def n_users(self) -> int:
        return self.U.shape[0]

    @property
    def n_items(self) -> int:
        return self.V.shape[1]

    def predict_pairs(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        raw = np.einsum("ij,ji->i", self.U[users], self.V[:, items])
        return self.norm.denormalize_values(raw, items)


def predict_rating(f: FactorModel, u: int, i: int) -> float:
    """Single-pair prediction; raises IndexError for out-of-range indices."""
    if not 0 <= u < f.n_users:
        raise IndexError(f"user index {u} out of range [0, {f.n_users})")
    if not 0 <= i < f.n_items:
        raise IndexError(f"item index {i} out of range [0, {f.n_items})")
    return float(f.predict_pairs(np.array([u]), np.array([i]))[0])


def truncated_svd(
    A: np.ndarray, k: int, tol: float = 1e-10, max_iter: int = 1000
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rank-k SVD of a dense matrix by orthogonal iteration.

    Iterates a k-dimensional basis on the smaller of the two Gram matrices
    with QR re-orthonormalization until the Ritz values stabilize (relative
    change below tol), then extracts singular triplets by Rayleigh-Ritz.

    Returns (U_k, sigma, Vt_k) with sigma in non-increasing order.
    """
    A = np.asarray(A, dtype=np.float64)
    n, m = A.shape
    if not 1 <= k <= min(n, m):
        raise ConfigError(f"rank must be in [1, {min(n, m)}], got {k}")

    use_cols = m <= n  # iterate on the smaller Gram matrix
    G = A.T @ A if use_cols else A @ A.T
    dim = G.shape[0]

    rng = np.random.default_rng(0x5EED)
    Q, _ = np.linalg.qr(rng.normal(size=(dim, k)))
    prev = None
    converged = False
    for _ in range(max_iter):
        Q, _ = np.linalg.qr(G @ Q)
        ritz = np.sort(np.linalg.eigvalsh(Q.T @ G @ Q))[::-1]
        scale = max(abs(ritz[0]), 1e-30)
        if prev is not None and np.max(np.abs(ritz - prev)) <= tol * scale:
            converged = True
            break
        prev = ritz
    if not converged:
        raise NumericError(
            f"truncated SVD did not converge within {max_iter} iterations (tol={tol})"
        )

    lam, W = np.linalg.eigh(Q.T @ G @ Q)
    order = np.argsort(lam)[::-1]
    lam = np.maximum(lam[order], 0.0)
    basis = Q @ W[:, order]
    sigma = np.sqrt(lam)
    safe = np.where(sigma > sigma[0] * 1e-15 if sigma[0] > 0 else sigma > 0, sigma, np.inf)

    if use_cols:
        Vk = basis
        Uk = (A @ Vk) / safe
    else:
        Uk = basis
        Vk = (A.T @ Uk) / safe
    return Uk, sigma, Vk.T


def svd_baseline(m: RatingMatrix, rank: int = 5, normalize: str = "column") -> FactorModel:
    """Truncated-SVD baseline: normalize, impute zeros, factor at rank k.

    The singular values are split evenly, U <- U_k sqrt(S), V <- sqrt(S) Vt_k.
    """
    norm_m, state = normalize_ratings(m, normalize)
    dense, _ = norm_m.to_dense()
    Uk, sigma, Vtk = truncated_svd(dense, rank)
    root = np.sqrt(sigma)
    return FactorModel(Uk * root, root[:, None] * Vtk, state)


@dataclass(frozen=True)
class AlsConfig:
    rank: int = 3
    lam: float = 0.1
    iterations: int = 20


def _masked_objective(norm_m: RatingMatrix, U: np.ndarray, V: np.ndarray, lam: float) -> float:
    pred = np.einsum("ij,ji->i", U[norm_m.users], V[:, norm_m.items])
    resid = norm_m.values - pred
    return float(resid @ resid + lam * ((U * U).sum() + (V * V).sum()))


def als_train(
    m: RatingMatrix, cfg: AlsConfig, normalize: str = "column"
) -> tuple[FactorModel, list[float]]:
    """Alternating ridge regression on the observed entries only.

    Factors start from the truncated-SVD baseline at the same rank. Each half
    step solves the exact normal equations for one side, so the masked
    objective sum((r - UV)^2) + lam (|U|_F^2 + |V|_F^2) never increases.
    Returns the model and the objective history (initial value, then one
    entry per half step).
    """
    if cfg.rank < 1:
        raise ConfigError(f"rank must be >= 1, got {cfg.rank}")
    if cfg.lam < 0:
        raise ConfigError(f"lambda must be >= 0, got {cfg.lam}")
    if cfg.iterations < 1:
        raise ConfigError(f"iterations must be >= 1, got {cfg.iterations}")

    init = svd_baseline(m, cfg.rank, normalize)
    U, V = init.U.copy(), init.V.copy()
    norm_m, state = normalize_ratings(m, normalize)
    k, lam = cfg.rank, cfg.lam
    eye = np.eye(k)

    history = [_masked_objective(norm_m, U, V, lam)]
    for _ in range(cfg.iterations):
        for u in range(norm_m.n_users):
            cols, vals = norm_m.user_profile(u)
            Vj = V[:, cols]
            try:
                U[u] = np.linalg.solve(Vj @ Vj.T + lam * eye, Vj @ vals)
            except np.linalg.LinAlgError as exc:
                raise NumericError(
                    f"singular normal equations for user row {u} (lambda={lam})"
                ) from exc
        history.append(_masked_objective(norm_m, U, V, lam))
        for i in range(norm_m.n_items):
            rows, vals = norm_m.item_profile(i)
            Uj = U[rows]
            try:
                V[:, i] = np.linalg.solve(Uj.T @ Uj + lam * eye, Uj.T @ vals)
            except np.linalg.LinAlgError as exc:
                raise NumericError(
                    f"singular normal equations for item column {i} (lambda={lam})"
                ) from exc
        history.append(_masked_objective(norm_m, U, V, lam))
    return FactorModel(U, V, state), history


@dataclass(frozen=True)
class FunkConfig:
    rank: int = 3
    eta: float = 1e-3
    alpha: float = 5e-3
    beta: float = 5e-3
    epochs: int = 100
    seed: int = 0


def funk_entry_loss(u_vec: np.ndarray, v_vec: np.ndarray, r: float, alpha: float, beta: float) -> float:
    """Per-entry objective: squared error plus squared-norm penalties."""
    e = r - float(u_vec @ v_vec)
    return 0.5 * e * e + 0.5 * alpha * float(u_vec @ u_vec) + 0.5 * beta * float(v_vec @ v_vec)


def funk_entry_grads(
    u_vec: np.ndarray, v_vec: np.ndarray, r: float, alpha: float, beta: float
) -> tuple[np.ndarray, np.ndarray]:
    e = r - float(u_vec @ v_vec)
    return -e * v_vec + alpha * u_vec, -e * u_vec + beta * v_vec


@njit(cache=True)
def _funk_epoch(users, items, values, order, U, V, eta, alpha, beta):
    k = U.shape[1]
    for t in range(order.size):
        idx = order[t]
        u = users[idx]
        i = items[idx]
        pred = 0.0
        for f in range(k):
            pred += U[u, f] * V[f, i]
        err = values[idx] - pred
        for f in range(k):
            uf = U[u, f]
            vf = V[f, i]
            U[u, f] = uf + eta * (err * vf - alpha * uf)
            V[f, i] = vf + eta * (err * uf - beta * vf)


def funk_train(
    m: RatingMatrix, cfg: FunkConfig, normalize: str = "column"
) -> tuple[FactorModel, list[float]]:
    """Sequential per-entry SGD on the squared-error objective.

    Entry visit order is reshuffled each epoch from the seeded generator, so
    the run is deterministic given cfg.seed. Returns the model and the raw
    scale training RMSE after every epoch. epochs=0 keeps the random
    initialization.
    """
    if cfg.rank < 1:
        raise ConfigError(f"rank must be >= 1, got {cfg.rank}")
    if cfg.eta <= 0:
        raise ConfigError(f"eta must be > 0, got {cfg.eta}")
    if cfg.epochs < 0:
        raise ConfigError(f"epochs must be >= 0, got {cfg.epochs}")

    norm_m, state = normalize_ratings(m, normalize)
    rng = np.random.default_rng(cfg.seed)
    U = rng.normal(scale=0.1, size=(m.n_users, cfg.rank))
    V = rng.normal(scale=0.1, size=(cfg.rank, m.n_items))
    model = FactorModel(U, V, state)

    history: list[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(norm_m.n_entries)
        _funk_epoch(
            norm_m.users, norm_m.items, norm_m.values, order,
            U, V, cfg.eta, cfg.alpha, cfg.beta,
        )
        train_rmse = rmse_values(model.predict_pairs(m.users, m.items), m.values)
        if not np.isfinite(train_rmse):
            raise NumericError(
                f"FunkSVD diverged at epoch {epoch}; try a smaller eta than {cfg.eta}"
            )
        history.append(train_rmse)
    return model, history


def save_factor_model(f: FactorModel, path) -> None:
    """Versioned binary dump; round-trips bit exactly."""
    with open(path, "wb") as fh:
        np.savez(
            fh,
            magic=np.array(_MODEL_MAGIC),
            version=np.array(_MODEL_VERSION),
            U=f.U,
            V=f.V,
            norm_mode=np.array(f.norm.mode),
            column_means=f.norm.column_means,
            column_stds=f.norm.column_stds,
            global_mean=np.array(f.norm.global_mean),
        )


def load_factor_model(path) -> FactorModel:
    with np.load(path, allow_pickle=False) as z:
        if "magic" not in z or str(z["magic"]) != _MODEL_MAGIC:
            raise ParseError(f"{path} is not a factor model dump")
        if int(z["version"]) != _MODEL_VERSION:
            raise ParseError(f"unsupported factor model version {int(z['version'])}")
        norm = NormalizationState(
            str(z["norm_mode"]), z["column_means"], z["column_stds"], float(z["global_mean"])
        )
        return FactorModel(z["U"], z["V"], norm)


class SVDBaseline(RatingEstimator):
    """Truncated-SVD rating predictor on column-normalized data."""

    def __init__(self, rank=5, normalize="column", n_users=None, n_items=None):
        self.rank = rank
        self.normalize = normalize
        self.n_users = n_users
        self.n_items = n_items

    def fit(self, X, y=None):
        m = self._resolve_matrix(X, y)
        self.model_ = svd_baseline(m, self.rank, self.normalize)
        return self

    def predict(self, X):
        users, items = self._check_pairs(X, self.model_.n_users, self.model_.n_items)
        return self.model_.predict_pairs(users, items)


class ALS(RatingEstimator):
    """Alternating least squares with L2 regularization on observed entries."""

    def __init__(self, rank=3, lam=0.1, n_iter=20, normalize="column", n_users=None, n_items=None):
        self.rank = rank
        self.lam = lam
        self.n_iter = n_iter
        self.normalize = normalize
        self.n_users = n_users
        self.n_items = n_items

    def fit(self, X, y=None):
        m = self._resolve_matrix(X, y)
        cfg = AlsConfig(rank=self.rank, lam=self.lam, iterations=self.n_iter)
        self.model_, self.history_ = als_train(m, cfg, self.normalize)
        return self

    def predict(self, X):
        users, items = self._check_pairs(X, self.model_.n_users, self.model_.n_items)
        return self.model_.predict_pairs(users, items)


class FunkSVD(RatingEstimator):
    """Stochastic gradient descent factorization (per-entry updates)."""

    def __init__(self, rank=3, eta=1e-3, alpha=5e-3, beta=5e-3, n_epochs=100,
                 seed=0, normalize="column", n_users=None, n_items=None):
        self.rank = rank
        self.eta = eta
        self.alpha = alpha
        self.beta = beta
        self.n_epochs = n_epochs
        self.seed = seed
        self.normalize = normalize
        self.n_users = n_users
        self.n_items = n_items

    def fit(self, X, y=None):
        m = self._resolve_matrix(X, y)
        cfg = FunkConfig(rank=self.rank, eta=self.eta, alpha=self.alpha,
                         beta=self.beta, epochs=self.n_epochs, seed=self.seed)
        self.model_, self.history_ = funk_train(m, cfg, self.normalize)
        return self

    def predict(self, X):
        users, items = self._check_pairs(X, self.model_.n_users, self.model_.n_items)
        return self.model_.predict_pairs(users, items)
