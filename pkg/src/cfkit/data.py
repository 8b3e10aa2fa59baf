"""Sparse rating data: loading, splitting, normalization, and scoring.

The on-disk format is the Kaggle-style submission CSV: a header line
``Id,Prediction`` followed by rows ``r<row>_c<col>,<value>`` with 1-based
row (user) and column (item) indices.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import ConfigError, DuplicateRatingError, ParseError, RatingRangeError

STD_FLOOR = 1e-6

_ROW_RE = re.compile(r"^r(\d+)_c(\d+)$")


class RatingMatrix:
    """Immutable sparse user x item matrix of observed ratings.

    Stores the raw entry arrays plus row-major (per-user) and column-major
    (per-item) index structures, both sorted by counterpart index. Per-user
    and per-item means fall back to the global mean for empty profiles.
    """

    def __init__(
        self,
        users: np.ndarray,
        items: np.ndarray,
        values: np.ndarray,
        n_users: int | None = None,
        n_items: int | None = None,
        value_range: tuple[float, float] | None = (1.0, 5.0),
    ):
        users = np.asarray(users, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (users.shape == items.shape == values.shape) or users.ndim != 1:
            raise ValueError("users, items, values must be 1-d arrays of equal length")
        if users.size and (users.min() < 0 or items.min() < 0):
            raise ValueError("negative user or item index")

        self.n_users = int(n_users) if n_users is not None else (int(users.max()) + 1 if users.size else 0)
        self.n_items = int(n_items) if n_items is not None else (int(items.max()) + 1 if items.size else 0)
        if users.size:
            if users.max() >= self.n_users:
                raise ValueError(f"user index {int(users.max())} outside n_users={self.n_users}")
            if items.max() >= self.n_items:
                raise ValueError(f"item index {int(items.max())} outside n_items={self.n_items}")

        if value_range is not None and values.size:
            lo, hi = value_range
            if values.min() < lo or values.max() > hi:
                bad = int(np.argmax((values < lo) | (values > hi)))
                raise RatingRangeError(
                    f"rating {values[bad]} for user {int(users[bad])}, item {int(items[bad])} "
                    f"outside [{lo}, {hi}]"
                )
        if values.size and not np.all(np.isfinite(values)):
            raise ValueError("non-finite rating value")

        self.users = users
        self.items = items
        self.values = values

        # Row-major structure: entries grouped by user, sorted by item index.
        order = np.lexsort((items, users))
        su, si, sv = users[order], items[order], values[order]
        if su.size > 1:
            dup = (su[1:] == su[:-1]) & (si[1:] == si[:-1])
            if dup.any():
                j = int(np.argmax(dup))
                raise DuplicateRatingError(
                    f"duplicate rating for user {int(su[j])}, item {int(si[j])}"
                )
        self.user_ptr = np.zeros(self.n_users + 1, dtype=np.int64)
        np.cumsum(np.bincount(su, minlength=self.n_users), out=self.user_ptr[1:])
        self.user_items = si
        self.user_values = sv

        # Column-major structure: entries grouped by item, sorted by user index.
        order_c = np.lexsort((users, items))
        self.item_ptr = np.zeros(self.n_items + 1, dtype=np.int64)
        np.cumsum(np.bincount(items[order_c], minlength=self.n_items), out=self.item_ptr[1:])
        self.item_users = users[order_c]
        self.item_values = values[order_c]

        self.user_counts = np.diff(self.user_ptr)
        self.item_counts = np.diff(self.item_ptr)
        self.global_mean = float(values.mean()) if values.size else 0.0

        usum = np.bincount(su, weights=sv, minlength=self.n_users)
        isum = np.bincount(items, weights=values, minlength=self.n_items)
        self.user_means = np.where(self.user_counts > 0, usum / np.maximum(self.user_counts, 1), self.global_mean)
        self.item_means = np.where(self.item_counts > 0, isum / np.maximum(self.item_counts, 1), self.global_mean)

        for arr in (self.users, self.items, self.values, self.user_ptr, self.user_items,
                    self.user_values, self.item_ptr, self.item_users, self.item_values,
                    self.user_counts, self.item_counts, self.user_means, self.item_means):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return self.users.size

    @property
    def n_entries(self) -> int:
        return self.users.size

    def user_profile(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Items rated by user u and the ratings, sorted by item index."""
        lo, hi = self.user_ptr[u], self.user_ptr[u + 1]
        return self.user_items[lo:hi], self.user_values[lo:hi]

    def item_profile(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Users who rated item i and the ratings, sorted by user index."""
        lo, hi = self.item_ptr[i], self.item_ptr[i + 1]
        return self.item_users[lo:hi], self.item_values[lo:hi]

    def lookup(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        """Rating values for explicit (user, item) pairs.

        Raises KeyError if any pair is not observed.
        """
        users = np.asarray(users, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        out = np.empty(users.size, dtype=np.float64)
        for n, (u, i) in enumerate(zip(users, items)):
            if not (0 <= u < self.n_users):
                raise KeyError(f"user index {int(u)} out of range")
            lo, hi = self.user_ptr[u], self.user_ptr[u + 1]
            pos = lo + np.searchsorted(self.user_items[lo:hi], i)
            if pos >= hi or self.user_items[pos] != i:
                raise KeyError(f"no rating for user {int(u)}, item {int(i)}")
            out[n] = self.user_values[pos]
        return out

    def subset(self, entry_indices: np.ndarray) -> "RatingMatrix":
        """New matrix from a subset of entries, keeping the parent dimensions."""
        idx = np.asarray(entry_indices, dtype=np.int64)
        return RatingMatrix(
            self.users[idx], self.items[idx], self.values[idx],
            n_users=self.n_users, n_items=self.n_items, value_range=None,
        )

    def to_dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense (values, mask) arrays; unobserved cells are 0 with mask False."""
        dense = np.zeros((self.n_users, self.n_items))
        mask = np.zeros((self.n_users, self.n_items), dtype=bool)
        dense[self.users, self.items] = self.values
        mask[self.users, self.items] = True
        return dense, mask


@dataclass(frozen=True)
class PredictionSet:
    """Predicted values for explicit (user, item) pairs, 0-based indices."""

    users: np.ndarray
    items: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return self.users.size

    def clipped(self, lo: float = 1.0, hi: float = 5.0) -> "PredictionSet":
        return PredictionSet(self.users, self.items, np.clip(self.values, lo, hi))


@dataclass(frozen=True)
class DataSplit:
    train: RatingMatrix
    validation: RatingMatrix
    fraction: float
    seed: int


@dataclass(frozen=True)
class NormalizationState:
    """Per-column affine transform plus the global mean of the source matrix.

    mode "column": value -> (value - mean_col) / std_col with population stds
    floored at STD_FLOOR; unobserved columns carry (global_mean, 1.0).
    mode "none": identity transform.
    """

    mode: str
    column_means: np.ndarray
    column_stds: np.ndarray
    global_mean: float

    def normalize_values(self, values: np.ndarray, items: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.column_means[items]) / self.column_stds[items]

    def denormalize_values(self, values: np.ndarray, items: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.column_stds[items] + self.column_means[items]


def _open_maybe(source, mode: str) -> tuple[TextIO, bool]:
    if hasattr(source, "read") or hasattr(source, "write"):
        return source, False
    return open(source, mode), True


def _parse_rows(stream: TextIO) -> Iterator[tuple[int, int, int, float]]:
    """Yields (line_number, user, item, value) with 0-based indices."""
    first = stream.readline()
    if not first:
        raise ParseError("empty input", 1)
    if not first.lower().lstrip().startswith("id"):
        raise ParseError("expected 'Id,Prediction' header", 1)
    for ln, line in enumerate(stream, start=2):
        line = line.strip()
        if not line:
            continue
        head, sep, tail = line.partition(",")
        if not sep:
            raise ParseError(f"expected '<id>,<value>', got {line!r}", ln)
        m = _ROW_RE.match(head.strip())
        if m is None:
            raise ParseError(f"malformed id {head.strip()!r}", ln)
        row, col = int(m.group(1)), int(m.group(2))
        if row < 1 or col < 1:
            raise ParseError(f"indices are 1-based, got {head.strip()!r}", ln)
        try:
            value = float(tail)
        except ValueError:
            raise ParseError(f"malformed value {tail.strip()!r}", ln) from None
        if not np.isfinite(value):
            raise ParseError(f"non-finite value {tail.strip()!r}", ln)
        yield ln, row - 1, col - 1, value


def load_ratings(
    source,
    n_users: int | None = None,
    n_items: int | None = None,
    value_range: tuple[float, float] | None = (1.0, 5.0),
) -> RatingMatrix:
    """Read a rating matrix from a path or text stream.

    Dimensions default to the maximum observed index; pass n_users/n_items to
    fix them explicitly. value_range=None relaxes the [1, 5] rating check.
    """
    stream, close = _open_maybe(source, "r")
    try:
        users, items, values = [], [], []
        for ln, u, i, v in _parse_rows(stream):
            if n_users is not None and u >= n_users:
                raise ParseError(f"row index {u + 1} exceeds n_users={n_users}", ln)
            if n_items is not None and i >= n_items:
                raise ParseError(f"column index {i + 1} exceeds n_items={n_items}", ln)
            users.append(u)
            items.append(i)
            values.append(v)
    finally:
        if close:
            stream.close()
    return RatingMatrix(
        np.array(users, dtype=np.int64),
        np.array(items, dtype=np.int64),
        np.array(values, dtype=np.float64),
        n_users=n_users,
        n_items=n_items,
        value_range=value_range,
    )


def read_predictions(source) -> PredictionSet:
    """Read a submission-format file back as a PredictionSet (order preserved)."""
    stream, close = _open_maybe(source, "r")
    try:
        users, items, values = [], [], []
        for _, u, i, v in _parse_rows(stream):
            users.append(u)
            items.append(i)
            values.append(v)
    finally:
        if close:
            stream.close()
    return PredictionSet(
        np.array(users, dtype=np.int64),
        np.array(items, dtype=np.int64),
        np.array(values, dtype=np.float64),
    )


def read_query_pairs(source) -> tuple[np.ndarray, np.ndarray]:
    """(users, items) pairs from a submission-format file, values ignored."""
    pred = read_predictions(source)
    return pred.users, pred.items


def split_ratings(m: RatingMatrix, fraction: float = 0.8, seed: int = 0) -> DataSplit:
    """Uniform random partition of the observed entries.

    The train part receives round(fraction * n_entries) entries, the
    validation part the remainder. Deterministic in (seed, fraction); both
    parts keep the parent dimensions.
    """
    if not (0.0 < fraction <= 1.0):
        raise ConfigError(f"split fraction must be in (0, 1], got {fraction}")
    n = m.n_entries
    n_train = int(round(fraction * n))
    n_train = min(max(n_train, 0), n)
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    val_idx = np.sort(perm[n_train:])
    return DataSplit(m.subset(train_idx), m.subset(val_idx), fraction, seed)


def normalize_ratings(m: RatingMatrix, mode: str = "column") -> tuple[RatingMatrix, NormalizationState]:
    """Column-wise z-scoring of the observed entries.

    Returns the transformed matrix (same sparsity pattern, entries no longer
    restricted to [1, 5]) and the state needed to invert the transform.
    """
    if mode == "none":
        state = NormalizationState(
            "none", np.zeros(m.n_items), np.ones(m.n_items), m.global_mean
        )
        return m, state
    if mode != "column":
        raise ConfigError(f"unknown normalization mode {mode!r}")
    counts = m.item_counts
    sums = np.bincount(m.items, weights=m.values, minlength=m.n_items)
    means = np.where(counts > 0, sums / np.maximum(counts, 1), m.global_mean)
    sqsums = np.bincount(m.items, weights=m.values**2, minlength=m.n_items)
    var = sqsums / np.maximum(counts, 1) - (sums / np.maximum(counts, 1)) ** 2
    stds = np.where(counts > 0, np.sqrt(np.maximum(var, 0.0)), 1.0)
    stds = np.maximum(stds, STD_FLOOR)
    state = NormalizationState("column", means, stds, m.global_mean)
    normalized = RatingMatrix(
        m.users, m.items, state.normalize_values(m.values, m.items),
        n_users=m.n_users, n_items=m.n_items, value_range=None,
    )
    return normalized, state


def rmse_values(predicted: np.ndarray, actual: np.ndarray) -> float:
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape:
        raise ValueError(f"shape mismatch: {predicted.shape} vs {actual.shape}")
    if predicted.size == 0:
        raise ValueError("rmse of empty prediction set")
    return float(np.sqrt(np.mean((predicted - actual) ** 2)))


def rmse(pred: PredictionSet, truth: RatingMatrix) -> float:
    """Root mean squared error of pred against observed entries of truth.

    Every predicted pair must exist in truth (KeyError otherwise). Values are
    compared as given; clip beforehand if needed.
    """
    actual = truth.lookup(pred.users, pred.items)
    return rmse_values(pred.values, actual)


def _format_value(v: float) -> str:
    s = f"{v:.8g}"
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def write_submission(pred: PredictionSet, sink) -> None:
    """Write predictions in submission format (1-based ids, clipped to [1, 5])."""
    clipped = pred.clipped()
    stream, close = _open_maybe(sink, "w")
    try:
        stream.write("Id,Prediction\n")
        for u, i, v in zip(clipped.users, clipped.items, clipped.values):
            stream.write(f"r{u + 1}_c{i + 1},{_format_value(v)}\n")
    finally:
        if close:
            stream.close()


def submission_text(pred: PredictionSet) -> str:
    buf = io.StringIO()
    write_submission(pred, buf)
    return buf.getvalue()
