import numpy as np
import pytest
from sklearn.base import clone

from cfkit.data import RatingMatrix
from cfkit.errors import ConfigError
from cfkit.similarity import (
    SimilarityConfig,
    SimilarityKNN,
    apply_weighting,
    compute_similarity,
    default_beta,
    predict_combined,
    predict_knn,
    predict_knn_many,
)


@pytest.fixture
def two_full_users():
    """Two users rating the same three items; hand-checkable overlaps.

    u0: [4, 2, 3] (mean 3), u1: [5, 3, 1] (mean 3).
    """
    users = np.array([0, 0, 0, 1, 1, 1])
    items = np.array([0, 1, 2, 0, 1, 2])
    values = np.array([4.0, 2.0, 3.0, 5.0, 3.0, 1.0])
    return RatingMatrix(users, items, values)


def test_cosine_hand_value(two_full_users):
    s = compute_similarity(two_full_users, "user", "cosine")
    # (4*5 + 2*3 + 3*1) / (sqrt(29) * sqrt(35))
    assert s.S[0, 1] == pytest.approx(29.0 / np.sqrt(1015.0), abs=1e-12)
    assert s.overlap[0, 1] == 3


def test_pcc_hand_value(two_full_users):
    s = compute_similarity(two_full_users, "user", "pcc")
    # centered profiles [1,-1,0] and [2,0,-2]: 2 / sqrt(2 * 8)
    assert s.S[0, 1] == pytest.approx(0.5, abs=1e-12)


def test_sigra_hand_value(two_full_users):
    s = compute_similarity(two_full_users, "user", "sigra")
    atten = 1.0 / (1.0 + np.exp(-1.0))  # (3 + 3) / (2 * 3) = 1
    ratios = (4.0 / 5.0 + 2.0 / 3.0 + 1.0 / 3.0) / 3.0
    assert s.S[0, 1] == pytest.approx(atten * ratios, abs=1e-12)


@pytest.mark.parametrize("axis", ["user", "item"])
def test_pcc_is_cosine_after_centering(noisy_rank3, axis):
    m = noisy_rank3
    means = m.user_means if axis == "user" else m.item_means
    keys = m.users if axis == "user" else m.items
    centered = RatingMatrix(
        m.users, m.items, m.values - means[keys],
        n_users=m.n_users, n_items=m.n_items, value_range=None,
    )
    pcc = compute_similarity(m, axis, "pcc")
    cos = compute_similarity(centered, axis, "cosine")
    np.testing.assert_allclose(pcc.S, cos.S, atol=1e-12)
    np.testing.assert_array_equal(pcc.overlap, cos.overlap)


@pytest.mark.parametrize("measure", ["cosine", "pcc", "sigra"])
def test_similarity_symmetric_bounded(noisy_rank3, measure):
    s = compute_similarity(noisy_rank3, "item", measure)
    np.testing.assert_allclose(s.S, s.S.T, atol=1e-12)
    assert (np.abs(s.S) <= 1.0).all()
    np.testing.assert_array_equal(np.diag(s.S), 1.0)
    np.testing.assert_array_equal(s.overlap, s.overlap.T)


def test_empty_entity_gets_zero_diagonal():
    m = RatingMatrix(np.array([0]), np.array([0]), np.array([3.0]), n_users=2)
    s = compute_similarity(m, "user", "cosine")
    np.testing.assert_array_equal(np.diag(s.S), [1.0, 0.0])
    assert s.S[0, 1] == 0.0


def test_zero_overlap_pairs_get_zero_similarity():
    users = np.array([0, 0, 1, 1])
    items = np.array([0, 1, 2, 3])
    values = np.array([4.0, 3.0, 2.0, 5.0])
    m = RatingMatrix(users, items, values)
    for measure in ("cosine", "pcc", "sigra"):
        s = compute_similarity(m, "user", measure)
        assert s.S[0, 1] == 0.0


def test_weighting_hand_values(tiny_matrix):
    # u0 rated 2 items, u3 rated 1, overlap {item 0}, raw cosine 1.0
    raw = compute_similarity(tiny_matrix, "user", "cosine")
    assert raw.S[0, 3] == pytest.approx(1.0)
    normal = apply_weighting(raw, tiny_matrix, "normal")
    assert normal.S[0, 3] == pytest.approx(2.0 / 3.0, abs=1e-12)
    sig = apply_weighting(raw, tiny_matrix, "significance", beta=7)
    assert sig.S[0, 3] == pytest.approx(1.0 / 7.0, abs=1e-12)
    sigm = apply_weighting(raw, tiny_matrix, "sigmoid")
    assert sigm.S[0, 3] == pytest.approx(1.0 / (1.0 + np.exp(-0.5)), abs=1e-12)
    for s in (normal, sig, sigm):
        np.testing.assert_array_equal(np.diag(s.S), np.diag(raw.S))


@pytest.mark.parametrize("weighting", ["normal", "significance", "sigmoid"])
def test_weighting_contracts_similarities(noisy_rank3, weighting):
    raw = compute_similarity(noisy_rank3, "user", "pcc")
    w = apply_weighting(raw, noisy_rank3, weighting, beta=7)
    off = ~np.eye(raw.S.shape[0], dtype=bool)
    assert (np.abs(w.S[off]) <= np.abs(raw.S[off]) + 1e-15).all()


def test_weighting_none_returns_copy(tiny_matrix):
    raw = compute_similarity(tiny_matrix, "user", "cosine")
    same = apply_weighting(raw, tiny_matrix, "none")
    np.testing.assert_array_equal(same.S, raw.S)
    same.S[0, 1] = -9.0
    assert raw.S[0, 1] != -9.0


def test_sigra_is_never_reweighted(two_full_users):
    s = compute_similarity(two_full_users, "user", "sigra")
    with pytest.raises(ConfigError, match="sigra"):
        apply_weighting(s, two_full_users, "normal")
    with pytest.raises(ConfigError, match="sigra"):
        SimilarityConfig(measure="sigra", weighting="normal")
    SimilarityConfig(measure="sigra", weighting="none")


def test_default_betas():
    assert default_beta("user") == 7
    assert default_beta("item") == 70
    assert default_beta("both") == 20
    with pytest.raises(ConfigError):
        default_beta("diagonal")
    assert SimilarityConfig(axis="user").resolved_beta() == 7
    assert SimilarityConfig(axis="item", beta=3).resolved_beta() == 3


@pytest.mark.parametrize(
    "kwargs",
    [
        {"axis": "diag"},
        {"measure": "jaccard"},
        {"weighting": "log"},
        {"beta": 0},
        {"k_neighbors": 0},
        {"user_weight": 1.5},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SimilarityConfig(**kwargs)


def test_knn_hand_prediction_user_axis(tiny_matrix):
    s = compute_similarity(tiny_matrix, "user", "cosine")
    # item 2 raters: u1 (dev 1-3=-2), u2 (dev 4-3=1), both sim 1.0
    assert predict_knn(tiny_matrix, s, 0, 2) == pytest.approx(3.0, abs=1e-12)
    # k=1 with tied sims keeps the lower-index neighbor u1
    assert predict_knn(tiny_matrix, s, 0, 2, k=1) == pytest.approx(1.5, abs=1e-12)


def test_knn_hand_prediction_item_axis(tiny_matrix):
    s = compute_similarity(tiny_matrix, "item", "cosine")
    # u0 rated i0 (dev 4-4=0) and i1 (dev 3-2.5=0.5), both sim 1.0
    assert predict_knn(tiny_matrix, s, 0, 2) == pytest.approx(2.75, abs=1e-12)


def test_knn_skips_zero_similarity_neighbors(tiny_matrix):
    s = compute_similarity(tiny_matrix, "user", "cosine")
    # item 1 raters: u0 (sim 1, dev -0.5) and u2 (no overlap with u3, sim 0)
    assert predict_knn(tiny_matrix, s, 3, 1) == pytest.approx(2.5, abs=1e-12)


def test_knn_empty_neighborhood_falls_back_to_mean():
    users = np.array([0, 0, 1, 1, 2])
    items = np.array([0, 1, 0, 1, 2])
    values = np.array([4.0, 3.0, 2.0, 5.0, 4.0])
    m = RatingMatrix(users, items, values, n_items=3)
    s = compute_similarity(m, "user", "cosine")
    # u2 shares no items with the raters of item 0
    assert predict_knn(m, s, 2, 0) == pytest.approx(4.0, abs=1e-12)


def test_predict_knn_index_errors(tiny_matrix):
    s = compute_similarity(tiny_matrix, "user", "cosine")
    with pytest.raises(IndexError):
        predict_knn(tiny_matrix, s, 4, 0)
    with pytest.raises(IndexError):
        predict_knn(tiny_matrix, s, 0, 3)


def test_predict_knn_many_matches_singles(tiny_matrix):
    s = compute_similarity(tiny_matrix, "item", "pcc")
    users = np.array([0, 1, 2, 3])
    items = np.array([2, 1, 0, 1])
    many = predict_knn_many(tiny_matrix, s, users, items, k=2)
    singles = [predict_knn(tiny_matrix, s, int(u), int(i), k=2) for u, i in zip(users, items)]
    np.testing.assert_allclose(many, singles)


def test_predict_combined(tiny_matrix):
    su = compute_similarity(tiny_matrix, "user", "cosine")
    si = compute_similarity(tiny_matrix, "item", "cosine")
    got = predict_combined(tiny_matrix, su, si, 0, 2, user_weight=0.06)
    assert got == pytest.approx(0.06 * 3.0 + 0.94 * 2.75, abs=1e-12)
    assert predict_combined(tiny_matrix, su, si, 0, 2) == pytest.approx(2.875, abs=1e-12)
    with pytest.raises(ConfigError, match="user_weight"):
        predict_combined(tiny_matrix, su, si, 0, 2, user_weight=-0.1)


def test_estimator_single_axis_matches_functions(tiny_matrix):
    est = SimilarityKNN(axis="item", measure="pcc", weighting="normal").fit(tiny_matrix)
    assert est.sim_user_ is None
    expected_sim = apply_weighting(
        compute_similarity(tiny_matrix, "item", "pcc"), tiny_matrix, "normal", 70
    )
    np.testing.assert_array_equal(est.sim_item_.S, expected_sim.S)
    pairs = np.array([[0, 2], [3, 1]])
    np.testing.assert_allclose(
        est.predict(pairs),
        predict_knn_many(tiny_matrix, expected_sim, pairs[:, 0], pairs[:, 1]),
    )


def test_estimator_both_axes(tiny_matrix):
    est = SimilarityKNN(
        axis="both", measure="cosine", weighting="none", user_weight=0.06
    ).fit(tiny_matrix)
    assert est.sim_user_ is not None and est.sim_item_ is not None
    got = est.predict(np.array([[0, 2]]))
    assert got[0] == pytest.approx(0.06 * 3.0 + 0.94 * 2.75, abs=1e-12)


def test_estimator_rejects_bad_config(tiny_matrix):
    with pytest.raises(ConfigError, match="sigra"):
        SimilarityKNN(measure="sigra", weighting="normal").fit(tiny_matrix)
    with pytest.raises(ConfigError, match="axis"):
        SimilarityKNN(axis="sideways").fit(tiny_matrix)


def test_estimator_clone_roundtrip():
    est = SimilarityKNN(axis="both", measure="sigra", weighting="none", k=30, user_weight=0.2)
    assert clone(est).get_params() == est.get_params()
