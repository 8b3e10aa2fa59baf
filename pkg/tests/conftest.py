import numpy as np
import pytest

from cfkit.data import RatingMatrix
from cfkit.synthetic import low_rank_ratings


@pytest.fixture
def tiny_matrix():
    """4 users x 3 items, hand-checkable."""
    users = np.array([0, 0, 1, 1, 2, 2, 3])
    items = np.array([0, 1, 0, 2, 1, 2, 0])
    values = np.array([4.0, 3.0, 5.0, 1.0, 2.0, 4.0, 3.0])
    return RatingMatrix(users, items, values)


@pytest.fixture(scope="session")
def noisy_rank3():
    """Medium synthetic matrix shared by model tests (read-only)."""
    return low_rank_ratings(50, 30, rank=3, density=0.6, noise=0.3, seed=4)
