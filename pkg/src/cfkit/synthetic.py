"""Synthetic rating data generators for experiments and tests."""

from __future__ import annotations

import numpy as np

from .data import RatingMatrix


def sample_pairs(n_users: int, n_items: int, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """n distinct (user, item) cells drawn uniformly from the full grid."""
    if n > n_users * n_items:
        raise ValueError("more cells requested than the grid holds")
    flat = rng.choice(n_users * n_items, size=n, replace=False)
    return flat // n_items, flat % n_items


def low_rank_ratings(
    n_users: int,
    n_items: int,
    rank: int,
    density: float,
    noise: float = 0.0,
    seed: int = 0,
    center: float = 3.0,
    spread: float = 0.9,
    clip: bool = True,
    integer: bool = False,
) -> RatingMatrix:
    """Partially observed ratings from a random low-rank model.

    Values are center + spread * (U V^T)/sqrt(rank) + noise, optionally
    clipped to [1, 5] and rounded to integer star ratings. With clip=False the
    observed values are exactly low-rank plus noise (useful for recovery
    tests) and may leave [1, 5].
    """
    rng = np.random.default_rng(seed)
    users, items = sample_pairs(n_users, n_items, int(round(density * n_users * n_items)), rng)
    u_fac = rng.normal(size=(n_users, rank))
    v_fac = rng.normal(size=(n_items, rank))
    raw = np.sum(u_fac[users] * v_fac[items], axis=1) / np.sqrt(rank)
    values = center + spread * raw
    if noise > 0.0:
        values = values + noise * rng.normal(size=values.size)
    if integer:
        values = np.round(values)
    if clip:
        values = np.clip(values, 1.0, 5.0)
    return RatingMatrix(
        users, items, values,
        n_users=n_users, n_items=n_items,
        value_range=(1.0, 5.0) if clip else None,
    )


def fm_ground_truth(
    n_users: int,
    n_items: int,
    n_rows: int,
    rank: int,
    noise: float = 0.1,
    seed: int = 0,
    bias: float = 3.5,
    scale: float = 0.3,
):
    """Observations from a random degree-2 factorization machine.

    Each row is the two-hot encoding of a distinct (user, item) cell; the
    target is w0 + w_u + w_i + <v_u, v_i> plus Gaussian noise. Returns
    (users, items, targets, params) where params holds the generating
    coefficients.
    """
    rng = np.random.default_rng(seed)
    users, items = sample_pairs(n_users, n_items, n_rows, rng)
    w_user = rng.normal(scale=scale, size=n_users)
    w_item = rng.normal(scale=scale, size=n_items)
    v_user = rng.normal(scale=scale, size=(n_users, rank))
    v_item = rng.normal(scale=scale, size=(n_items, rank))
    clean = bias + w_user[users] + w_item[items] + np.sum(v_user[users] * v_item[items], axis=1)
    y = clean + noise * rng.normal(size=n_rows)
    params = {
        "bias": bias,
        "w_user": w_user,
        "w_item": w_item,
        "v_user": v_user,
        "v_item": v_item,
        "clean": clean,
    }
    return users, items, y, params
