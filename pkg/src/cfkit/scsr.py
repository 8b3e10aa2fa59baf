"""Stochastic cross-axis similarity reinforcement.

Starting from user-user similarities U and item-item similarities V, each
iteration rewrites every user pair (a, b) as a damped weighted average of
item similarities between their profiles, and every item pair symmetrically
from user similarities:

    U[a, b] <- (1 - alpha) U[a, b] + alpha * sum_pq w_pq V[i_p^a, i_q^b]
                                              / sum_pq |w_pq|

where p runs over items rated by a, q over items rated by b, and the weight
w_pq = 1 - 2 |r_ap - r_bq| compares ratings normalized to [0, 1] via
(r - 1) / 4. Both halves of an iteration read the previous iteration's
matrices (Jacobi style), so the result is independent of pair order.

The full update is O(|U|^2 |I|^2) per iteration. The stochastic variant
draws sigma profile entries per side (all of them when the profile is
smaller), fresh per pair per iteration, cutting the cost to
O((|U|^2 + |I|^2) sigma^2). Each pair derives its own RNG stream from
(seed, iteration, a, b), so results are deterministic and independent of
evaluation order. A zero weight denominator keeps the old value; diagonals
are never touched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .base import RatingEstimator
from .data import RatingMatrix
from .errors import ConfigError
from .similarity import SimilarityMatrix, apply_weighting, compute_similarity, predict_combined


def to_unit_ratings(values: np.ndarray) -> np.ndarray:
    """Map star ratings in [1, 5] onto [0, 1]."""
    return (np.asarray(values, dtype=np.float64) - 1.0) / 4.0


def pair_weight(r1, r2):
    """Agreement weight 1 - 2|r1 - r2| for unit-normalized ratings.

    Equal ratings give 1, maximally distant ratings give -1.
    """
    return 1.0 - 2.0 * np.abs(np.asarray(r1, dtype=np.float64) - np.asarray(r2, dtype=np.float64))


@dataclass(frozen=True)
class ScsrConfig:
    alpha: float = 0.5
    sigma: int = 15
    max_iter: int = 15
    epsilon: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.sigma < 1:
            raise ConfigError(f"sigma must be >= 1, got {self.sigma}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.epsilon <= 0.0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass
class ReinforcedSimilarities:
    user_sim: np.ndarray
    item_sim: np.ndarray
    iterations_run: int
    converged: bool


@njit(cache=True)
def _splitmix(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True)
def _pair_state(seed, iteration, a, b, tag):
    s = np.uint64(seed)
    s, _ = _splitmix(s ^ np.uint64(iteration))
    s, _ = _splitmix(s ^ np.uint64(a))
    s, _ = _splitmix(s ^ np.uint64(b))
    s, _ = _splitmix(s ^ np.uint64(tag))
    return s


@njit(cache=True)
def _full_half(ptr, idx, vals, cross, prev, alpha, out):
    # out must arrive as a copy of prev; diagonal stays untouched
    n = ptr.size - 1
    for a in range(n):
        lo_a, hi_a = ptr[a], ptr[a + 1]
        for b in range(a + 1, n):
            lo_b, hi_b = ptr[b], ptr[b + 1]
            num = 0.0
            den = 0.0
            for p in range(lo_a, hi_a):
                ip = idx[p]
                rp = vals[p]
                for q in range(lo_b, hi_b):
                    w = 1.0 - 2.0 * abs(rp - vals[q])
                    num += w * cross[ip, idx[q]]
                    den += abs(w)
            if den > 0.0:
                nv = (1.0 - alpha) * prev[a, b] + alpha * num / den
                out[a, b] = nv
                out[b, a] = nv


@njit(cache=True)
def _sample_offsets(state, length, sigma, buf):
    # distinct offsets in [0, length) by rejection; caller ensures sigma < length
    count = 0
    while count < sigma:
        state, z = _splitmix(state)
        r = np.int64(z % np.uint64(length))
        dup = False
        for t in range(count):
            if buf[t] == r:
                dup = True
                break
        if not dup:
            buf[count] = r
            count += 1
    return state


@njit(cache=True)
def _stochastic_half(ptr, idx, vals, cross, prev, alpha, out, sigma, seed, iteration, tag, buf_a, buf_b):
    n = ptr.size - 1
    for a in range(n):
        lo_a = ptr[a]
        len_a = ptr[a + 1] - lo_a
        for b in range(a + 1, n):
            lo_b = ptr[b]
            len_b = ptr[b + 1] - lo_b
            state = _pair_state(seed, iteration, a, b, tag)
            if len_a <= sigma:
                na = len_a
                for t in range(na):
                    buf_a[t] = t
            else:
                na = sigma
                state = _sample_offsets(state, len_a, sigma, buf_a)
            if len_b <= sigma:
                nb = len_b
                for t in range(nb):
                    buf_b[t] = t
            else:
                nb = sigma
                state = _sample_offsets(state, len_b, sigma, buf_b)
            num = 0.0
            den = 0.0
            for p in range(na):
                pos_p = lo_a + buf_a[p]
                ip = idx[pos_p]
                rp = vals[pos_p]
                for q in range(nb):
                    pos_q = lo_b + buf_b[q]
                    w = 1.0 - 2.0 * abs(rp - vals[pos_q])
                    num += w * cross[ip, idx[pos_q]]
                    den += abs(w)
            if den > 0.0:
                nv = (1.0 - alpha) * prev[a, b] + alpha * num / den
                out[a, b] = nv
                out[b, a] = nv


def _profile_arrays(m: RatingMatrix):
    user = (m.user_ptr, m.user_items, to_unit_ratings(m.user_values))
    item = (m.item_ptr, m.item_users, to_unit_ratings(m.item_values))
    return user, item


def _check_shapes(m: RatingMatrix, U: np.ndarray, V: np.ndarray):
    if U.shape != (m.n_users, m.n_users):
        raise ValueError(f"user similarity must be {(m.n_users, m.n_users)}, got {U.shape}")
    if V.shape != (m.n_items, m.n_items):
        raise ValueError(f"item similarity must be {(m.n_items, m.n_items)}, got {V.shape}")


def csr_update_reference(
    m: RatingMatrix, U_prev: np.ndarray, V_prev: np.ndarray, alpha: float
) -> tuple[np.ndarray, np.ndarray]:
    """One full (non-stochastic) reinforcement iteration over all pairs."""
    _check_shapes(m, U_prev, V_prev)
    (u_ptr, u_idx, u_val), (i_ptr, i_idx, i_val) = _profile_arrays(m)
    U_next = np.ascontiguousarray(U_prev, dtype=np.float64).copy()
    V_next = np.ascontiguousarray(V_prev, dtype=np.float64).copy()
    Up = np.ascontiguousarray(U_prev, dtype=np.float64)
    Vp = np.ascontiguousarray(V_prev, dtype=np.float64)
    _full_half(u_ptr, u_idx, u_val, Vp, Up, alpha, U_next)
    _full_half(i_ptr, i_idx, i_val, Up, Vp, alpha, V_next)
    return U_next, V_next


def scsr_train(
    m: RatingMatrix, U0: np.ndarray, V0: np.ndarray, cfg: ScsrConfig
) -> ReinforcedSimilarities:
    """Run stochastic reinforcement until both Frobenius deltas drop below
    cfg.epsilon or cfg.max_iter iterations are reached."""
    _check_shapes(m, U0, V0)
    (u_ptr, u_idx, u_val), (i_ptr, i_idx, i_val) = _profile_arrays(m)
    U_prev = np.ascontiguousarray(U0, dtype=np.float64).copy()
    V_prev = np.ascontiguousarray(V0, dtype=np.float64).copy()
    buf_a = np.empty(cfg.sigma, dtype=np.int64)
    buf_b = np.empty(cfg.sigma, dtype=np.int64)

    converged = False
    iterations_run = 0
    for it in range(cfg.max_iter):
        U_next = U_prev.copy()
        V_next = V_prev.copy()
        _stochastic_half(u_ptr, u_idx, u_val, V_prev, U_prev, cfg.alpha, U_next,
                         cfg.sigma, cfg.seed, it, 0, buf_a, buf_b)
        _stochastic_half(i_ptr, i_idx, i_val, U_prev, V_prev, cfg.alpha, V_next,
                         cfg.sigma, cfg.seed, it, 1, buf_a, buf_b)
        d_user = float(np.linalg.norm(U_next - U_prev))
        d_item = float(np.linalg.norm(V_next - V_prev))
        U_prev, V_prev = U_next, V_next
        iterations_run = it + 1
        if d_user < cfg.epsilon and d_item < cfg.epsilon:
            converged = True
            break
    return ReinforcedSimilarities(U_prev, V_prev, iterations_run, converged)


class StochasticCSR(RatingEstimator):
    """Neighborhood predictor on stochastically reinforced similarities.

    Initial matrices come from the configured similarity measure on both
    axes; prediction combines the user-axis and item-axis neighborhood
    estimates with the given user_weight.
    """

    def __init__(self, alpha=0.5, sigma=15, max_iter=15, epsilon=1e-3, seed=0,
                 measure="pcc", weighting="normal", beta=None, k=None,
                 user_weight=0.5, n_users=None, n_items=None):
        self.alpha = alpha
        self.sigma = sigma
        self.max_iter = max_iter
        self.epsilon = epsilon
        self.seed = seed
        self.measure = measure
        self.weighting = weighting
        self.beta = beta
        self.k = k
        self.user_weight = user_weight
        self.n_users = n_users
        self.n_items = n_items

    def fit(self, X, y=None):
        cfg = ScsrConfig(alpha=self.alpha, sigma=self.sigma, max_iter=self.max_iter,
                         epsilon=self.epsilon, seed=self.seed)
        m = self._resolve_matrix(X, y)
        self.matrix_ = m
        beta = self.beta if self.beta is not None else 20
        su = apply_weighting(compute_similarity(m, "user", self.measure), m, self.weighting, beta)
        si = apply_weighting(compute_similarity(m, "item", self.measure), m, self.weighting, beta)
        self.result_ = scsr_train(m, su.S, si.S, cfg)
        self.sim_user_ = SimilarityMatrix("user", self.measure, self.result_.user_sim, su.overlap)
        self.sim_item_ = SimilarityMatrix("item", self.measure, self.result_.item_sim, si.overlap)
        return self

    def predict(self, X):
        users, items = self._check_pairs(X, self.matrix_.n_users, self.matrix_.n_items)
        out = np.empty(users.size)
        for n, (u, i) in enumerate(zip(users, items)):
            out[n] = predict_combined(
                self.matrix_, self.sim_user_, self.sim_item_, int(u), int(i), self.k, self.user_weight
            )
        return out
