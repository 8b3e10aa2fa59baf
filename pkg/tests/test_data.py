import io

import numpy as np
import pytest

from cfkit.data import (
    PredictionSet,
    RatingMatrix,
    load_ratings,
    normalize_ratings,
    read_predictions,
    read_query_pairs,
    rmse,
    rmse_values,
    split_ratings,
    submission_text,
    write_submission,
)
from cfkit.errors import ConfigError, DuplicateRatingError, ParseError, RatingRangeError

SAMPLE = "Id,Prediction\nr1_c1,4\nr2_c3,3.5\nr37_c2,1\n"


def test_load_ratings_parses_one_based_ids():
    m = load_ratings(io.StringIO(SAMPLE))
    assert (m.n_users, m.n_items) == (37, 3)
    assert m.lookup([0], [0])[0] == 4.0
    assert m.lookup([1], [2])[0] == 3.5
    assert m.lookup([36], [1])[0] == 1.0


def test_load_ratings_explicit_dims():
    m = load_ratings(io.StringIO(SAMPLE), n_users=50, n_items=10)
    assert (m.n_users, m.n_items) == (50, 10)
    with pytest.raises(ParseError, match="exceeds n_users"):
        load_ratings(io.StringIO(SAMPLE), n_users=10)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("", "empty input"),
        ("nope\nr1_c1,3\n", "header"),
        ("Id,Prediction\nr1c1,3\n", "line 2"),
        ("Id,Prediction\nr1_c1,3\nrx_c2,1\n", "line 3"),
        ("Id,Prediction\nr0_c1,3\n", "1-based"),
        ("Id,Prediction\nr1_c1,abc\n", "malformed value"),
        ("Id,Prediction\nr1_c1,inf\n", "non-finite"),
        ("Id,Prediction\nr1_c1\n", "line 2"),
    ],
)
def test_parse_errors_carry_line_numbers(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        load_ratings(io.StringIO(text))


def test_duplicate_entry_rejected():
    with pytest.raises(DuplicateRatingError, match="user 0, item 0"):
        RatingMatrix(np.array([0, 0]), np.array([0, 0]), np.array([3.0, 4.0]))


def test_rating_range_enforced():
    with pytest.raises(RatingRangeError, match="6.0"):
        RatingMatrix(np.array([0]), np.array([0]), np.array([6.0]))
    # relaxed range allows anything finite
    RatingMatrix(np.array([0]), np.array([0]), np.array([6.0]), value_range=None)


def test_profiles_sorted_and_lookup_missing(tiny_matrix):
    items, values = tiny_matrix.user_profile(1)
    assert items.tolist() == [0, 2] and values.tolist() == [5.0, 1.0]
    users, values = tiny_matrix.item_profile(0)
    assert users.tolist() == [0, 1, 3]
    with pytest.raises(KeyError, match="no rating for user 0, item 2"):
        tiny_matrix.lookup([0], [2])


def test_means_and_empty_profile_fallback():
    m = RatingMatrix(np.array([0, 0]), np.array([0, 1]), np.array([2.0, 4.0]),
                     n_users=3, n_items=3)
    assert m.global_mean == 3.0
    assert m.user_means[0] == 3.0
    assert m.user_means[2] == 3.0  # empty profile falls back to global mean
    assert m.item_means[2] == 3.0


def test_split_sizes_and_determinism(noisy_rank3):
    m = noisy_rank3
    s1 = split_ratings(m, 0.8, seed=3)
    s2 = split_ratings(m, 0.8, seed=3)
    assert s1.train.n_entries == round(0.8 * m.n_entries)
    assert s1.train.n_entries + s1.validation.n_entries == m.n_entries
    assert np.array_equal(s1.train.users, s2.train.users)
    assert np.array_equal(s1.validation.values, s2.validation.values)
    # both parts keep the parent dimensions
    assert (s1.validation.n_users, s1.validation.n_items) == (m.n_users, m.n_items)
    s3 = split_ratings(m, 0.8, seed=4)
    assert not np.array_equal(s1.train.users, s3.train.users)


def test_split_partition_is_exact(noisy_rank3):
    s = split_ratings(noisy_rank3, 0.75, seed=0)
    train = set(zip(s.train.users.tolist(), s.train.items.tolist()))
    val = set(zip(s.validation.users.tolist(), s.validation.items.tolist()))
    assert not train & val
    assert len(train | val) == noisy_rank3.n_entries


def test_split_fraction_bounds(noisy_rank3):
    full = split_ratings(noisy_rank3, 1.0, seed=0)
    assert full.validation.n_entries == 0
    for bad in (0.0, -0.2, 1.01):
        with pytest.raises(ConfigError, match="fraction"):
            split_ratings(noisy_rank3, bad)


def test_normalization_round_trip(noisy_rank3):
    norm_m, state = normalize_ratings(noisy_rank3, "column")
    back = state.denormalize_values(norm_m.values, norm_m.items)
    np.testing.assert_allclose(back, noisy_rank3.values, atol=1e-12)
    # observed columns are zero mean, unit variance after the transform
    j = noisy_rank3.items[0]
    col = norm_m.values[norm_m.items == j]
    assert abs(col.mean()) < 1e-12
    assert abs(col.std() - 1.0) < 1e-9


def test_normalization_unobserved_and_constant_columns():
    m = RatingMatrix(np.array([0, 1, 2]), np.array([0, 0, 1]),
                     np.array([4.0, 4.0, 2.0]), n_users=3, n_items=3)
    norm_m, state = normalize_ratings(m)
    # constant column: std floored, values map to 0
    assert state.column_stds[0] == pytest.approx(1e-6)
    assert norm_m.values[0] == 0.0
    # unobserved column: (global mean, 1) so denormalize is the identity shift
    assert state.column_means[2] == pytest.approx(m.global_mean)
    assert state.column_stds[2] == 1.0


def test_normalization_mode_none_is_identity(noisy_rank3):
    same, state = normalize_ratings(noisy_rank3, "none")
    assert same is noisy_rank3
    np.testing.assert_array_equal(
        state.denormalize_values(same.values, same.items), same.values)
    with pytest.raises(ConfigError, match="normalization"):
        normalize_ratings(noisy_rank3, "rows")


def test_rmse_values():
    assert rmse_values([3.0, 4.0], [3.0, 2.0]) == pytest.approx(np.sqrt(2.0))
    with pytest.raises(ValueError):
        rmse_values([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        rmse_values([], [])


def test_rmse_against_matrix(tiny_matrix):
    pred = PredictionSet(tiny_matrix.users, tiny_matrix.items,
                         tiny_matrix.values + 1.0)
    assert rmse(pred, tiny_matrix) == pytest.approx(1.0)


def test_submission_format_and_clipping():
    pred = PredictionSet(np.array([0, 1, 2]), np.array([0, 4, 2]),
                         np.array([3.5, 7.2, 0.1]))
    text = submission_text(pred)
    lines = text.strip().split("\n")
    assert lines[0] == "Id,Prediction"
    assert lines[1] == "r1_c1,3.5"
    assert lines[2] == "r2_c5,5.0"  # clipped into [1, 5]
    assert lines[3] == "r3_c3,1.0"


def test_submission_whole_numbers_keep_decimal_point():
    pred = PredictionSet(np.array([0]), np.array([0]), np.array([4.0]))
    assert "r1_c1,4.0" in submission_text(pred)


def test_submission_round_trip_precision():
    rng = np.random.default_rng(8)
    values = rng.uniform(1.0, 5.0, 500)
    pred = PredictionSet(np.zeros(500, dtype=np.int64),
                         np.arange(500, dtype=np.int64), values)
    buf = io.StringIO()
    write_submission(pred, buf)
    back = read_predictions(io.StringIO(buf.getvalue()))
    np.testing.assert_array_equal(back.users, pred.users)
    np.testing.assert_array_equal(back.items, pred.items)
    np.testing.assert_allclose(back.values, values, atol=1e-6, rtol=0)


def test_read_query_pairs():
    users, items = read_query_pairs(io.StringIO(SAMPLE))
    assert users.tolist() == [0, 1, 36]
    assert items.tolist() == [0, 2, 1]


def test_subset_keeps_dimensions(tiny_matrix):
    sub = tiny_matrix.subset(np.array([0, 3]))
    assert (sub.n_users, sub.n_items) == (4, 3)
    assert sub.n_entries == 2


def test_matrix_arrays_immutable(tiny_matrix):
    with pytest.raises(ValueError):
        tiny_matrix.values[0] = 9.9
