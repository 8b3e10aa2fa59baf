"""Shared estimator plumbing and input validation helpers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .data import RatingMatrix


def as_pair_arrays(X) -> tuple[np.ndarray, np.ndarray]:
    """Coerce X into (users, items) index arrays.

    Accepts an (n, 2) integer array or a (users, items) tuple of 1-d arrays.
    """
    if isinstance(X, tuple) and len(X) == 2:
        users = np.asarray(X[0], dtype=np.int64)
        items = np.asarray(X[1], dtype=np.int64)
        if users.shape != items.shape or users.ndim != 1:
            raise ValueError("users and items must be 1-d arrays of equal length")
        return users, items
    arr = np.asarray(X)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected (n, 2) pair array, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.allclose(arr, np.round(arr)):
            raise ValueError("pair indices must be integers")
        arr = np.round(arr).astype(np.int64)
    return arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64)


class RatingEstimator(BaseEstimator):
    """Base class for estimators operating on (user, item) -> rating data.

    fit accepts either a RatingMatrix directly or an (n, 2) array of pairs
    plus a value vector y. predict takes pairs in the same shapes and returns
    raw (unclipped) predicted ratings.
    """

    def _resolve_matrix(self, X, y=None) -> RatingMatrix:
        if isinstance(X, RatingMatrix):
            return X
        users, items = as_pair_arrays(X)
        if y is None:
            raise ValueError("y is required when X is a pair array")
        y = np.asarray(y, dtype=np.float64)
        if y.shape != users.shape:
            raise ValueError("y must match the number of pairs")
        n_users = getattr(self, "n_users", None)
        n_items = getattr(self, "n_items", None)
        return RatingMatrix(users, items, y, n_users=n_users, n_items=n_items, value_range=None)

    def _check_pairs(self, X, n_users: int, n_items: int) -> tuple[np.ndarray, np.ndarray]:
        users, items = as_pair_arrays(X)
        if users.size:
            if users.min() < 0 or users.max() >= n_users:
                raise IndexError(f"user index out of range [0, {n_users})")
            if items.min() < 0 or items.max() >= n_items:
                raise IndexError(f"item index out of range [0, {n_items})")
        return users, items
