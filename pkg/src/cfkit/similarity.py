"""Similarity-based neighborhood models.

Similarities are computed over the common support of two profiles. With
I_u the index set rated by entity u and sums running over k in I_u ∩ I_v:

    cosine(u, v) = sum r_uk r_vk / sqrt(sum r_uk^2) sqrt(sum r_vk^2)
    pcc(u, v)    = cosine after centering each entity by its full observed mean
    sigra(u, v)  = (1 + exp(-(|I_u|+|I_v|) / (2 |I_u ∩ I_v|)))^-1
                   * mean_k min(r_uk, r_vk) / max(r_uk, r_vk)

Pairs without overlap get similarity 0 and never enter a neighborhood. The
diagonal is pinned to 1 for entities with at least one rating and weighting
schemes leave it untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import RatingEstimator
from .data import RatingMatrix
from .errors import ConfigError

AXES = ("user", "item", "both")
MEASURES = ("cosine", "pcc", "sigra")
WEIGHTINGS = ("none", "normal", "significance", "sigmoid")

_DEFAULT_BETA = {"user": 7, "item": 70, "both": 20}


def default_beta(axis: str) -> int:
    if axis not in _DEFAULT_BETA:
        raise ConfigError(f"unknown axis {axis!r}")
    return _DEFAULT_BETA[axis]


@dataclass(frozen=True)
class SimilarityConfig:
    axis: str = "item"
    measure: str = "pcc"
    weighting: str = "normal"
    beta: int | None = None
    k_neighbors: int | None = None
    user_weight: float = 0.5

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.measure not in MEASURES:
            raise ConfigError(f"measure must be one of {MEASURES}, got {self.measure!r}")
        if self.weighting not in WEIGHTINGS:
            raise ConfigError(f"weighting must be one of {WEIGHTINGS}, got {self.weighting!r}")
        if self.measure == "sigra" and self.weighting != "none":
            raise ConfigError("sigra already attenuates by overlap; combine it with weighting='none'")
        if self.beta is not None and self.beta < 1:
            raise ConfigError(f"beta must be >= 1, got {self.beta}")
        if self.k_neighbors is not None and self.k_neighbors < 1:
            raise ConfigError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if not 0.0 <= self.user_weight <= 1.0:
            raise ConfigError(f"user_weight must be in [0, 1], got {self.user_weight}")

    def resolved_beta(self) -> int:
        return self.beta if self.beta is not None else default_beta(self.axis)


@dataclass
class SimilarityMatrix:
    """Symmetric entity similarities plus pairwise overlap counts."""

    axis: str  # "user" or "item"
    measure: str
    S: np.ndarray
    overlap: np.ndarray


def _axis_views(m: RatingMatrix, axis: str):
    """(dense ratings, mask, profile sizes, entity means) for one axis."""
    dense, mask = m.to_dense()
    if axis == "user":
        return dense, mask.astype(np.float64), m.user_counts.astype(np.float64), m.user_means
    if axis == "item":
        return dense.T, mask.T.astype(np.float64), m.item_counts.astype(np.float64), m.item_means
    raise ConfigError(f"axis must be 'user' or 'item', got {axis!r}")


def compute_similarity(m: RatingMatrix, axis: str, measure: str) -> SimilarityMatrix:
    """Unweighted pairwise similarities along one axis."""
    if measure not in MEASURES:
        raise ConfigError(f"measure must be one of {MEASURES}, got {measure!r}")
    R, M, sizes, means = _axis_views(m, axis)
    overlap = (M @ M.T).astype(np.int64)

    if measure in ("cosine", "pcc"):
        C = (R - means[:, None]) * M if measure == "pcc" else R * M
        num = C @ C.T
        d = (C * C) @ M.T
        den_sq = d * d.T
        with np.errstate(invalid="ignore", divide="ignore"):
            S = np.where((overlap > 0) & (den_sq > 0), num / np.sqrt(den_sq), 0.0)
    else:
        n = R.shape[0]
        S = np.zeros((n, n))
        with np.errstate(invalid="ignore", divide="ignore"):
            atten_arg = np.where(overlap > 0, (sizes[:, None] + sizes[None, :]) / (2.0 * np.maximum(overlap, 1)), 0.0)
        atten = 1.0 / (1.0 + np.exp(-atten_arg))
        common_mask = M.astype(bool)
        for u in range(n):
            both = common_mask[u] & common_mask
            lo = np.minimum(R[u], R)
            hi = np.maximum(R[u], R)
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio = np.where(both & (hi != 0), lo / np.where(hi != 0, hi, 1.0), 0.0)
            sums = ratio.sum(axis=1)
            S[u] = np.where(overlap[u] > 0, atten[u] * sums / np.maximum(overlap[u], 1), 0.0)

    S = np.clip(S, -1.0, 1.0)
    np.fill_diagonal(S, np.where(sizes > 0, 1.0, 0.0))
    return SimilarityMatrix("user" if axis == "user" else "item", measure, S, overlap)


def apply_weighting(
    s: SimilarityMatrix, m: RatingMatrix, weighting: str, beta: int | None = None
) -> SimilarityMatrix:
    """Shrink off-diagonal similarities by an overlap-driven factor in [0, 1].

    normal:       2 |I_u ∩ I_v| / (|I_u| + |I_v|)
    significance: min(|I_u ∩ I_v|, beta) / beta
    sigmoid:      (1 + exp(-|I_u ∩ I_v| / 2))^-1
    """
    if weighting not in WEIGHTINGS:
        raise ConfigError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")
    if weighting == "none":
        return SimilarityMatrix(s.axis, s.measure, s.S.copy(), s.overlap)
    if s.measure == "sigra":
        raise ConfigError("sigra similarities are never reweighted")
    _, _, sizes, _ = _axis_views(m, s.axis)
    o = s.overlap.astype(np.float64)
    if weighting == "normal":
        denom = sizes[:, None] + sizes[None, :]
        W = np.where(denom > 0, 2.0 * o / np.maximum(denom, 1.0), 0.0)
    elif weighting == "significance":
        if beta is None:
            raise ConfigError("significance weighting requires beta")
        if beta < 1:
            raise ConfigError(f"beta must be >= 1, got {beta}")
        W = np.minimum(o, float(beta)) / float(beta)
    else:
        W = 1.0 / (1.0 + np.exp(-o / 2.0))
    diag = np.diagonal(s.S).copy()
    S = W * s.S
    np.fill_diagonal(S, diag)
    return SimilarityMatrix(s.axis, s.measure, S, s.overlap)


def _knn_single(m: RatingMatrix, s: SimilarityMatrix, u: int, i: int, k: int | None) -> float:
    if s.axis == "user":
        base = m.user_means[u]
        cands, cand_ratings = m.item_profile(i)
        keep = cands != u
        cands, cand_ratings = cands[keep], cand_ratings[keep]
        sims = s.S[u, cands]
        devs = cand_ratings - m.user_means[cands]
    else:
        base = m.item_means[i]
        cands, cand_ratings = m.user_profile(u)
        keep = cands != i
        cands, cand_ratings = cands[keep], cand_ratings[keep]
        sims = s.S[i, cands]
        devs = cand_ratings - m.item_means[cands]
    nz = sims != 0.0
    sims, devs = sims[nz], devs[nz]
    if sims.size == 0:
        return float(base)
    # rank by raw similarity, ties resolved toward the lower entity index
    order = np.argsort(-sims, kind="stable")
    if k is not None:
        order = order[:k]
    chosen_s = sims[order]
    denom = np.abs(chosen_s).sum()
    if denom <= 0.0:
        return float(base)
    return float(base + (chosen_s @ devs[order]) / denom)


def predict_knn(m: RatingMatrix, s: SimilarityMatrix, u: int, i: int, k: int | None = None) -> float:
    """Mean-offset k nearest neighbor prediction.

    r_hat = mu_u + sum_{v in N_k} sim(u, v) (r_vi - mu_v) / sum |sim|, where
    N_k holds the k most similar entities that rated the counterpart. Empty
    neighborhoods fall back to the entity mean.
    """
    if not 0 <= u < m.n_users:
        raise IndexError(f"user index {u} out of range [0, {m.n_users})")
    if not 0 <= i < m.n_items:
        raise IndexError(f"item index {i} out of range [0, {m.n_items})")
    return _knn_single(m, s, u, i, k)


def predict_knn_many(m, s, users, items, k=None) -> np.ndarray:
    users = np.asarray(users, dtype=np.int64)
    items = np.asarray(items, dtype=np.int64)
    out = np.empty(users.size)
    for n, (u, i) in enumerate(zip(users, items)):
        out[n] = predict_knn(m, s, int(u), int(i), k)
    return out


def predict_combined(
    m: RatingMatrix,
    s_user: SimilarityMatrix,
    s_item: SimilarityMatrix,
    u: int,
    i: int,
    k: int | None = None,
    user_weight: float = 0.5,
) -> float:
    """Convex combination of the user-axis and item-axis predictions."""
    if not 0.0 <= user_weight <= 1.0:
        raise ConfigError(f"user_weight must be in [0, 1], got {user_weight}")
    pu = predict_knn(m, s_user, u, i, k)
    pi = predict_knn(m, s_item, u, i, k)
    return user_weight * pu + (1.0 - user_weight) * pi


class SimilarityKNN(RatingEstimator):
    """Neighborhood rating predictor over user, item, or both axes."""

    def __init__(self, axis="item", measure="pcc", weighting="normal", beta=None,
                 k=None, user_weight=0.5, n_users=None, n_items=None):
        self.axis = axis
        self.measure = measure
        self.weighting = weighting
        self.beta = beta
        self.k = k
        self.user_weight = user_weight
        self.n_users = n_users
        self.n_items = n_items

    def _config(self) -> SimilarityConfig:
        return SimilarityConfig(
            axis=self.axis, measure=self.measure, weighting=self.weighting,
            beta=self.beta, k_neighbors=self.k, user_weight=self.user_weight,
        )

    def fit(self, X, y=None):
        cfg = self._config()
        m = self._resolve_matrix(X, y)
        self.matrix_ = m
        beta = cfg.resolved_beta()
        self.sim_user_ = None
        self.sim_item_ = None
        if cfg.axis in ("user", "both"):
            s = compute_similarity(m, "user", cfg.measure)
            self.sim_user_ = apply_weighting(s, m, cfg.weighting, beta)
        if cfg.axis in ("item", "both"):
            s = compute_similarity(m, "item", cfg.measure)
            self.sim_item_ = apply_weighting(s, m, cfg.weighting, beta)
        return self

    def predict(self, X):
        users, items = self._check_pairs(X, self.matrix_.n_users, self.matrix_.n_items)
        m = self.matrix_
        if self.axis == "both":
            out = np.empty(users.size)
            for n, (u, i) in enumerate(zip(users, items)):
                out[n] = predict_combined(
                    m, self.sim_user_, self.sim_item_, int(u), int(i), self.k, self.user_weight
                )
            return out
        sim = self.sim_user_ if self.axis == "user" else self.sim_item_
        return predict_knn_many(m, sim, users, items, self.k)
