"""Bayesian factorization machines trained by Gibbs sampling.

The model is the usual degree-2 FM

    yhat(x) = w0 + sum_i w_i x_i + sum_{i<j} <v_i, v_j> x_i x_j

evaluated through the O(k * nnz) identity

    sum_{i<j} <v_i,v_j> x_i x_j
        = 1/2 sum_f [ (sum_i v_if x_i)^2 - sum_i v_if^2 x_i^2 ].

Parameters carry group-wise Gaussian priors (one group per feature block)
whose means and precisions get Gamma/Gaussian hyperprior resamples every
sweep. The regression head samples the noise precision; the ordered probit
head fixes unit noise, augments a latent score per row, and moves the four
category cutpoints by Metropolis steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import ndtr, ndtri

from .base import RatingEstimator
from .data import RatingMatrix
from .errors import ConfigError, NumericError, RatingRangeError

BLOCK_NAMES = ("user_onehot", "item_onehot", "implicit_user", "implicit_item")

_SCHEMA_CODES = {
    "ui": ("user_onehot", "item_onehot"),
    "uiiu": ("user_onehot", "item_onehot", "implicit_user"),
    "uiii": ("user_onehot", "item_onehot", "implicit_item"),
    "uiiuii": ("user_onehot", "item_onehot", "implicit_user", "implicit_item"),
}


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered selection of feature blocks; one-hot blocks are mandatory."""

    blocks: tuple[str, ...]

    def __post_init__(self):
        for b in self.blocks:
            if b not in BLOCK_NAMES:
                raise ConfigError(f"unknown feature block {b!r}")
        if len(set(self.blocks)) != len(self.blocks):
            raise ConfigError("duplicate feature block")
        if "user_onehot" not in self.blocks or "item_onehot" not in self.blocks:
            raise ConfigError("schema must contain user_onehot and item_onehot")
        canonical = tuple(b for b in BLOCK_NAMES if b in self.blocks)
        if self.blocks != canonical:
            raise ConfigError(f"blocks must appear in canonical order {canonical}")

    @classmethod
    def from_code(cls, code: str) -> "FeatureSchema":
        if code not in _SCHEMA_CODES:
            raise ConfigError(f"unknown schema code {code!r} (one of {sorted(_SCHEMA_CODES)})")
        return cls(_SCHEMA_CODES[code])

    def block_sizes(self, n_users: int, n_items: int) -> list[int]:
        per = {
            "user_onehot": n_users,
            "item_onehot": n_items,
            "implicit_user": n_items,
            "implicit_item": n_users,
        }
        return [per[b] for b in self.blocks]

    def block_ranges(self, n_users: int, n_items: int) -> list[tuple[str, int, int]]:
        out = []
        start = 0
        for name, size in zip(self.blocks, self.block_sizes(n_users, n_items)):
            out.append((name, start, start + size))
            start += size
        return out

    def n_features(self, n_users: int, n_items: int) -> int:
        return sum(self.block_sizes(n_users, n_items))


@dataclass
class FeatureMatrix:
    """Sparse feature rows plus targets for FM training or querying."""

    X: sp.csr_matrix
    targets: np.ndarray | None
    schema: FeatureSchema
    n_users: int
    n_items: int
    row_users: np.ndarray
    row_items: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def nnz(self) -> int:
        return self.X.nnz


def _take_ranges(starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Concatenate arange(start, start+length) segments without a Python loop."""
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    seg = np.repeat(np.arange(starts.size), lengths)
    seg_starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    within = np.arange(total) - np.repeat(seg_starts, lengths)
    return starts[seg] + within


def _implicit_block(ptr, idx, counts, row_keys, offset):
    """(rows, cols, vals) triplets of an implicit block for the given rows.

    Row r gets the profile of row_keys[r] valued 1/sqrt(count); empty
    profiles fall back to a single value 1 at the first block column.
    """
    counts_r = counts[row_keys]
    nonzero = counts_r > 0
    rows = np.repeat(np.arange(row_keys.size), np.where(nonzero, counts_r, 1))
    # positions inside the profile arrays for non-empty profiles
    starts = ptr[row_keys]
    cols = np.empty(rows.size, dtype=np.int64)
    vals = np.empty(rows.size, dtype=np.float64)
    lengths = np.where(nonzero, counts_r, 1)
    seg_starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    for r in np.flatnonzero(~nonzero):
        cols[seg_starts[r]] = offset
        vals[seg_starts[r]] = 1.0
    if nonzero.any():
        take = _take_ranges(starts[nonzero], counts_r[nonzero])
        mask = np.repeat(nonzero, lengths)
        cols[mask] = offset + idx[take]
        vals[mask] = np.repeat(1.0 / np.sqrt(counts_r[nonzero]), counts_r[nonzero])
    return rows, cols, vals


def _assemble(m: RatingMatrix, schema: FeatureSchema, row_users, row_items, targets):
    n = row_users.size
    n_feat = schema.n_features(m.n_users, m.n_items)
    rows_all, cols_all, vals_all = [], [], []
    for name, start, _ in schema.block_ranges(m.n_users, m.n_items):
        if name == "user_onehot":
            rows_all.append(np.arange(n))
            cols_all.append(start + row_users)
            vals_all.append(np.ones(n))
        elif name == "item_onehot":
            rows_all.append(np.arange(n))
            cols_all.append(start + row_items)
            vals_all.append(np.ones(n))
        elif name == "implicit_user":
            r, c, v = _implicit_block(m.user_ptr, m.user_items, m.user_counts, row_users, start)
            rows_all.append(r)
            cols_all.append(c)
            vals_all.append(v)
        else:  # implicit_item
            r, c, v = _implicit_block(m.item_ptr, m.item_users, m.item_counts, row_items, start)
            rows_all.append(r)
            cols_all.append(c)
            vals_all.append(v)
    X = sp.coo_matrix(
        (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
        shape=(n, n_feat),
    ).tocsr()
    X.sort_indices()
    return FeatureMatrix(X, targets, schema, m.n_users, m.n_items,
                         row_users.astype(np.int64), row_items.astype(np.int64))


def build_features(m: RatingMatrix, schema: FeatureSchema) -> FeatureMatrix:
    """One row per observed rating of m, targets = raw rating values.

    Implicit profiles are taken from m itself (the training matrix).
    """
    return _assemble(m, schema, m.users, m.items, m.values.copy())


def build_features_for_pairs(
    m: RatingMatrix, schema: FeatureSchema, users: np.ndarray, items: np.ndarray
) -> FeatureMatrix:
    """Query rows for arbitrary pairs; implicit profiles still come from m."""
    users = np.asarray(users, dtype=np.int64)
    items = np.asarray(items, dtype=np.int64)
    if users.size and (users.min() < 0 or users.max() >= m.n_users):
        raise IndexError(f"user index out of range [0, {m.n_users})")
    if items.size and (items.min() < 0 or items.max() >= m.n_items):
        raise IndexError(f"item index out of range [0, {m.n_items})")
    return _assemble(m, schema, users, items, None)


@dataclass
class FMModel:
    """Degree-2 FM parameters."""

    w0: float
    w: np.ndarray
    V: np.ndarray  # (n_features, rank)

    @property
    def rank(self) -> int:
        return self.V.shape[1]


def fm_predict(model: FMModel, indices: np.ndarray, values: np.ndarray) -> float:
    """Evaluate one sparse row in O(rank * nnz)."""
    indices = np.asarray(indices, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    out = model.w0 + float(model.w[indices] @ values)
    Vi = model.V[indices]
    s = values @ Vi
    s2 = (values * values) @ (Vi * Vi)
    return out + 0.5 * float(np.sum(s * s - s2))


def fm_predict_batch(model: FMModel, X: sp.csr_matrix, Xsq: sp.csr_matrix | None = None) -> np.ndarray:
    if Xsq is None:
        Xsq = X.multiply(X).tocsr()
    lin = model.w0 + X @ model.w
    P = X @ model.V
    Q = Xsq @ (model.V * model.V)
    return np.asarray(lin + 0.5 * (P * P - Q).sum(axis=1)).ravel()


@dataclass(frozen=True)
class GibbsRun:
    """Sampler configuration. burn_in=None means 20% of n_iterations."""

    rank: int = 50
    n_iterations: int = 500
    burn_in: int | None = None
    seed: int = 0
    alpha_0: float = 1.0        # noise precision Gamma shape (regression)
    beta_0: float = 1.0         # noise precision Gamma rate (regression)
    mu_0: float = 0.0           # hyperprior mean of the group means
    gamma_0: float = 1.0        # pseudo-count tying group means to mu_0
    alpha_lambda: float = 1.0   # Gamma shape for group precisions
    beta_lambda: float = 1.0    # Gamma rate for group precisions
    w0_precision: float = 1e-6  # near-flat Gaussian prior on the bias
    init_stdev: float = 0.1
    cutpoint_scale: float = 0.05  # Metropolis proposal std (ordered probit)

    def resolved_burn_in(self) -> int:
        if self.burn_in is None:
            return int(round(0.2 * self.n_iterations))
        return self.burn_in


@dataclass
class GibbsResult:
    predictions: np.ndarray
    train_predictions: np.ndarray
    n_retained: int
    cutpoints: np.ndarray | None = None
    cutpoint_acceptance: float | None = None


class _Block:
    """Per-block sampler layout.

    One-hot blocks store the active feature of each row, which lets a whole
    block update run as bincount reductions (rows are disjoint across the
    block's features, so the joint draw equals the sequential scan).
    Implicit blocks keep a column-major layout and update feature by feature.
    """

    def __init__(self, name: str, start: int, stop: int, features: FeatureMatrix):
        self.name = name
        self.start = start
        self.stop = stop
        self.size = stop - start
        self.onehot = name in ("user_onehot", "item_onehot")
        if self.onehot:
            self.feat = (features.row_users if name == "user_onehot" else features.row_items).copy()
            self.counts = np.bincount(self.feat, minlength=self.size).astype(np.float64)
        else:
            sub = features.X[:, start:stop].tocsc()
            sub.sort_indices()
            self.indptr = sub.indptr
            self.rows = sub.indices.astype(np.int64)
            self.vals = sub.data.astype(np.float64)
            self.sq_sums = np.asarray(sub.multiply(sub).sum(axis=0)).ravel()


class _SamplerState:
    def __init__(self, features: FeatureMatrix, run: GibbsRun, rng: np.random.Generator):
        self.X = features.X
        self.n_rows = features.n_rows
        self.n_features = features.n_features
        self.rank = run.rank
        ranges = features.schema.block_ranges(features.n_users, features.n_items)
        self.blocks = [_Block(name, a, b, features) for name, a, b in ranges]
        g = len(self.blocks)
        self.w0 = 0.0
        self.w = np.zeros(self.n_features)
        self.V = rng.normal(scale=run.init_stdev, size=(self.n_features, run.rank))
        self.mu_w = np.zeros(g)
        self.lambda_w = np.ones(g)
        self.mu_v = np.zeros((g, run.rank))
        self.lambda_v = np.ones((g, run.rank))
        self.e = np.zeros(self.n_rows)  # current residual yhat - target

    def model(self) -> FMModel:
        return FMModel(self.w0, self.w, self.V)


def _sample_hypers(st: _SamplerState, run: GibbsRun, rng: np.random.Generator) -> None:
    for g, blk in enumerate(st.blocks):
        p = blk.size
        w_slice = st.w[blk.start:blk.stop]
        dev = w_slice - st.mu_w[g]
        rate = run.beta_lambda + 0.5 * (dev @ dev + run.gamma_0 * (st.mu_w[g] - run.mu_0) ** 2)
        st.lambda_w[g] = rng.gamma(run.alpha_lambda + 0.5 * (p + 1), 1.0 / rate)
        mean = (w_slice.sum() + run.gamma_0 * run.mu_0) / (p + run.gamma_0)
        st.mu_w[g] = rng.normal(mean, 1.0 / np.sqrt((p + run.gamma_0) * st.lambda_w[g]))

        v_slice = st.V[blk.start:blk.stop]
        dev = v_slice - st.mu_v[g]
        rates = run.beta_lambda + 0.5 * ((dev * dev).sum(axis=0)
                                         + run.gamma_0 * (st.mu_v[g] - run.mu_0) ** 2)
        st.lambda_v[g] = rng.gamma(run.alpha_lambda + 0.5 * (p + 1), 1.0 / rates)
        means = (v_slice.sum(axis=0) + run.gamma_0 * run.mu_0) / (p + run.gamma_0)
        st.mu_v[g] = rng.normal(means, 1.0 / np.sqrt((p + run.gamma_0) * st.lambda_v[g]))


def _sample_w0(st: _SamplerState, run: GibbsRun, rng: np.random.Generator, alpha: float) -> None:
    prec = alpha * st.n_rows + run.w0_precision
    mean = alpha * (st.n_rows * st.w0 - st.e.sum()) / prec
    new = rng.normal(mean, 1.0 / np.sqrt(prec))
    st.e += new - st.w0
    st.w0 = new


def _sample_linear(st: _SamplerState, rng: np.random.Generator, alpha: float) -> None:
    for g, blk in enumerate(st.blocks):
        lam, mu = st.lambda_w[g], st.mu_w[g]
        if blk.onehot:
            theta = st.w[blk.start:blk.stop]
            s_e = np.bincount(blk.feat, weights=st.e, minlength=blk.size)
            prec = alpha * blk.counts + lam
            mean = (alpha * (blk.counts * theta - s_e) + lam * mu) / prec
            new = mean + rng.standard_normal(blk.size) / np.sqrt(prec)
            st.e += (new - theta)[blk.feat]
            st.w[blk.start:blk.stop] = new
        else:
            for j in range(blk.size):
                lo, hi = blk.indptr[j], blk.indptr[j + 1]
                rows, vals = blk.rows[lo:hi], blk.vals[lo:hi]
                theta = st.w[blk.start + j]
                hh = blk.sq_sums[j]
                he = theta * hh - vals @ st.e[rows]
                prec = alpha * hh + lam
                new = rng.normal((alpha * he + lam * mu) / prec, 1.0 / np.sqrt(prec))
                st.e[rows] += (new - theta) * vals
                st.w[blk.start + j] = new


def _sample_factors(st: _SamplerState, rng: np.random.Generator, alpha: float) -> None:
    for f in range(st.rank):
        q = np.asarray(st.X @ st.V[:, f]).ravel()
        for g, blk in enumerate(st.blocks):
            lam, mu = st.lambda_v[g, f], st.mu_v[g, f]
            if blk.onehot:
                v = st.V[blk.start:blk.stop, f]
                h = q - v[blk.feat]
                hh = np.bincount(blk.feat, weights=h * h, minlength=blk.size)
                he = np.bincount(blk.feat, weights=h * (v[blk.feat] * h - st.e), minlength=blk.size)
                prec = alpha * hh + lam
                mean = (alpha * he + lam * mu) / prec
                new = mean + rng.standard_normal(blk.size) / np.sqrt(prec)
                delta = (new - v)[blk.feat]
                st.e += delta * h
                q += delta
                st.V[blk.start:blk.stop, f] = new
            else:
                for j in range(blk.size):
                    lo, hi = blk.indptr[j], blk.indptr[j + 1]
                    rows, vals = blk.rows[lo:hi], blk.vals[lo:hi]
                    v = st.V[blk.start + j, f]
                    h = vals * (q[rows] - v * vals)
                    hh = h @ h
                    he = h @ (v * h - st.e[rows])
                    prec = alpha * hh + lam
                    new = rng.normal((alpha * he + lam * mu) / prec, 1.0 / np.sqrt(prec))
                    st.e[rows] += (new - v) * h
                    q[rows] += (new - v) * vals
                    st.V[blk.start + j, f] = new


def _validate_run(features: FeatureMatrix, run: GibbsRun) -> int:
    if features.targets is None:
        raise ConfigError("training feature matrix has no targets")
    if features.n_rows < 1:
        raise ConfigError("empty training feature matrix")
    if run.rank < 1:
        raise ConfigError(f"rank must be >= 1, got {run.rank}")
    burn = run.resolved_burn_in()
    if not 0 <= burn < run.n_iterations:
        raise ConfigError(
            f"need n_iterations > burn_in >= 0, got {run.n_iterations}, {burn}"
        )
    return burn


def _query_ops(query: FeatureMatrix | None):
    if query is None:
        return None, None
    Xq = query.X
    return Xq, Xq.multiply(Xq).tocsr()


def bfm_fit_regression(
    features: FeatureMatrix, run: GibbsRun, query: FeatureMatrix | None = None
) -> GibbsResult:
    """Gibbs-sample the regression FM and average per-sweep predictions.

    Targets are used raw. Deterministic given run.seed; prediction streams do
    not consume randomness, so the chain is independent of the query set.
    """
    burn = _validate_run(features, run)
    y = features.targets
    rng = np.random.default_rng(run.seed)
    st = _SamplerState(features, run, rng)
    st.w0 = float(y.mean())
    st.e = fm_predict_batch(st.model(), st.X) - y
    Xq, Xq_sq = _query_ops(query)

    alpha = 1.0
    acc_train = np.zeros(st.n_rows)
    acc_query = np.zeros(query.n_rows) if query is not None else None
    retained = 0
    for sweep in range(run.n_iterations):
        rate = run.beta_0 + 0.5 * float(st.e @ st.e)
        alpha = rng.gamma(run.alpha_0 + 0.5 * st.n_rows, 1.0 / rate)
        _sample_hypers(st, run, rng)
        _sample_w0(st, run, rng, alpha)
        _sample_linear(st, rng, alpha)
        _sample_factors(st, rng, alpha)
        if not np.isfinite(st.e).all():
            raise NumericError(f"non-finite sample at sweep {sweep}")
        if sweep >= burn:
            retained += 1
            acc_train += st.e + y
            if query is not None:
                acc_query += fm_predict_batch(st.model(), Xq, Xq_sq)
    preds = acc_query / retained if query is not None else np.empty(0)
    return GibbsResult(preds, acc_train / retained, retained)


def probit_category_probs(scores: np.ndarray, cutpoints: np.ndarray) -> np.ndarray:
    """Category probabilities (n, 5) from latent scores and 4 cutpoints."""
    scores = np.atleast_1d(np.asarray(scores, dtype=np.float64))
    edges = ndtr(cutpoints[None, :] - scores[:, None])
    probs = np.empty((scores.size, 5))
    probs[:, 0] = edges[:, 0]
    probs[:, 1:4] = np.diff(edges, axis=1)
    probs[:, 4] = 1.0 - edges[:, 3]
    return probs


def probit_expected_rating(scores: np.ndarray, cutpoints: np.ndarray) -> np.ndarray:
    """Expected rating sum_c c * p_c, always inside [1, 5]."""
    return probit_category_probs(scores, cutpoints) @ np.arange(1.0, 6.0)


def _init_cutpoints(y_cat: np.ndarray) -> np.ndarray:
    freq = np.bincount(y_cat, minlength=5) / y_cat.size
    cum = np.clip(np.cumsum(freq)[:4], 1e-3, 1.0 - 1e-3)
    c = ndtri(cum)
    for j in range(1, 4):
        c[j] = max(c[j], c[j - 1] + 1e-2)
    return c


def _cutpoint_loglik(scores, c_lo, c_hi):
    p = ndtr(c_hi - scores) - ndtr(c_lo - scores)
    return float(np.sum(np.log(np.maximum(p, 1e-300))))


def bfm_fit_ordered_probit(
    features: FeatureMatrix, run: GibbsRun, query: FeatureMatrix | None = None
) -> GibbsResult:
    """Ordered probit FM head for integer targets 1..5.

    Each sweep updates the cutpoints by Metropolis steps on the categorical
    likelihood (latent scores integrated out), redraws the latent scores from
    their truncated normals, then runs the usual FM parameter sweep with unit
    noise. The prediction for a query row is the posterior mean over retained
    sweeps of the per-sweep expected rating, hence always in [1, 5].
    """
    burn = _validate_run(features, run)
    y = features.targets
    if not np.all((y == np.round(y)) & (y >= 1) & (y <= 5)):
        raise RatingRangeError("ordered probit targets must be integers in {1..5}")
    y_cat = y.astype(np.int64) - 1
    cat_rows = [np.flatnonzero(y_cat == c) for c in range(5)]

    rng = np.random.default_rng(run.seed)
    st = _SamplerState(features, run, rng)
    cut = _init_cutpoints(y_cat)
    Xq, Xq_sq = _query_ops(query)

    lower_of = lambda c: np.concatenate(([-np.inf], c))[y_cat]
    upper_of = lambda c: np.concatenate((c, [np.inf]))[y_cat]

    def redraw_latent(scores):
        a = ndtr(lower_of(cut) - scores)
        b = ndtr(upper_of(cut) - scores)
        u = np.clip(a + (b - a) * rng.random(scores.size), 1e-15, 1.0 - 1e-15)
        return scores + ndtri(u)

    scores = fm_predict_batch(st.model(), st.X)
    z = redraw_latent(scores)
    st.e = scores - z

    acc_train = np.zeros(st.n_rows)
    acc_query = np.zeros(query.n_rows) if query is not None else None
    cut_samples = []
    retained = 0
    accepted = 0
    for sweep in range(run.n_iterations):
        _sample_hypers(st, run, rng)

        scores = st.e + z
        for j in range(4):
            prop = cut[j] + run.cutpoint_scale * rng.standard_normal()
            below = cut[j - 1] if j > 0 else -np.inf
            above = cut[j + 1] if j < 3 else np.inf
            if not (below < prop < above):
                continue
            s_j = scores[cat_rows[j]]
            s_j1 = scores[cat_rows[j + 1]]
            delta = (
                _cutpoint_loglik(s_j, below, prop)
                + _cutpoint_loglik(s_j1, prop, above)
                - _cutpoint_loglik(s_j, below, cut[j])
                - _cutpoint_loglik(s_j1, cut[j], above)
            )
            if np.log(rng.random()) < delta:
                cut[j] = prop
                accepted += 1

        z = redraw_latent(scores)
        st.e = scores - z

        _sample_w0(st, run, rng, 1.0)
        _sample_linear(st, rng, 1.0)
        _sample_factors(st, rng, 1.0)
        if not np.isfinite(st.e).all():
            raise NumericError(f"non-finite sample at sweep {sweep}")

        if sweep >= burn:
            retained += 1
            cut_samples.append(cut.copy())
            acc_train += probit_expected_rating(st.e + z, cut)
            if query is not None:
                acc_query += probit_expected_rating(fm_predict_batch(st.model(), Xq, Xq_sq), cut)

    preds = acc_query / retained if query is not None else np.empty(0)
    return GibbsResult(
        preds,
        acc_train / retained,
        retained,
        cutpoints=np.array(cut_samples),
        cutpoint_acceptance=accepted / (4 * run.n_iterations),
    )


class BayesianFM(RatingEstimator):
    """Bayesian FM rating predictor (regression or ordered probit head).

    predict() runs the Gibbs chain with the given pairs as query rows, since
    the posterior predictive is averaged during sampling. Two predict calls
    with the same seed produce identical chains, so predictions for a pair do
    not depend on which query set it belongs to.
    """

    def __init__(self, task="regression", schema="ui", rank=50, n_iter=500,
                 burn_in=None, seed=0, alpha_0=1.0, beta_0=1.0, gamma_0=1.0,
                 mu_0=0.0, alpha_lambda=1.0, beta_lambda=1.0, w0_precision=1e-6,
                 init_stdev=0.1, cutpoint_scale=0.05, n_users=None, n_items=None):
        self.task = task
        self.schema = schema
        self.rank = rank
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.seed = seed
        self.alpha_0 = alpha_0
        self.beta_0 = beta_0
        self.gamma_0 = gamma_0
        self.mu_0 = mu_0
        self.alpha_lambda = alpha_lambda
        self.beta_lambda = beta_lambda
        self.w0_precision = w0_precision
        self.init_stdev = init_stdev
        self.cutpoint_scale = cutpoint_scale
        self.n_users = n_users
        self.n_items = n_items

    def _run(self) -> GibbsRun:
        return GibbsRun(
            rank=self.rank, n_iterations=self.n_iter, burn_in=self.burn_in,
            seed=self.seed, alpha_0=self.alpha_0, beta_0=self.beta_0,
            gamma_0=self.gamma_0, mu_0=self.mu_0, alpha_lambda=self.alpha_lambda,
            beta_lambda=self.beta_lambda, w0_precision=self.w0_precision,
            init_stdev=self.init_stdev, cutpoint_scale=self.cutpoint_scale,
        )

    def fit(self, X, y=None):
        if self.task not in ("regression", "ordered_probit"):
            raise ConfigError(f"unknown task {self.task!r}")
        m = self._resolve_matrix(X, y)
        schema = self.schema if isinstance(self.schema, FeatureSchema) else FeatureSchema.from_code(self.schema)
        self.schema_ = schema
        self.matrix_ = m
        self.features_ = build_features(m, schema)
        return self

    def predict(self, X):
        users, items = self._check_pairs(X, self.matrix_.n_users, self.matrix_.n_items)
        query = build_features_for_pairs(self.matrix_, self.schema_, users, items)
        if self.task == "regression":
            result = bfm_fit_regression(self.features_, self._run(), query)
        else:
            result = bfm_fit_ordered_probit(self.features_, self._run(), query)
        self.last_result_ = result
        return result.predictions
