"""One-off calibration runs whose outputs are frozen into the test suite.

Prints the derived bounds (BFM synthetic recovery, rank-sweep curve shapes,
ALS exact-fit head room, FunkSVD monotonicity margins) plus the observed
runtimes used to size the acceptance tests. Not part of the package or the
test run; kept for reproducibility of the frozen numbers.

Usage: python3 scripts/calibrate.py
"""

import time

import numpy as np

from cfkit import ALS, BayesianFM, FunkSVD, RatingMatrix, rmse_values
from cfkit.data import split_ratings
from cfkit.fm import FeatureSchema, GibbsRun, bfm_fit_ordered_probit, build_features, build_features_for_pairs
from cfkit.synthetic import fm_ground_truth, low_rank_ratings


def bfm_recovery():
    print("== BFM synthetic recovery (k=4 truth, noise 0.1, 2000 rows) ==")
    worst = 0.0
    for seed in range(5):
        users, items, y, truth = fm_ground_truth(150, 100, 2000, rank=4, noise=0.1, seed=seed)
        n_train = 1600
        m = RatingMatrix(users[:n_train], items[:n_train], y[:n_train],
                         n_users=150, n_items=100, value_range=None)
        est = BayesianFM(task="regression", schema="ui", rank=8, n_iter=200, seed=seed,
                         n_users=150, n_items=100)
        t0 = time.perf_counter()
        est.fit(m)
        pred = est.predict((users[n_train:], items[n_train:]))
        dt = time.perf_counter() - t0
        r = rmse_values(pred, y[n_train:])
        worst = max(worst, r)
        print(f"  seed {seed}: held-out rmse {r:.6f}  ({dt:.1f}s)")
    print(f"  worst {worst:.6f}  -> frozen bound (x1.5) = {worst * 1.5:.6f}")


def als_exact_fit():
    print("== ALS lambda=0 exact fit on fully observed rank-3 ==")
    # center=0 keeps the matrix exactly rank 3 (an offset would add a rank-1 term)
    m = low_rank_ratings(20, 15, rank=3, density=1.0, noise=0.0, seed=2, clip=False, center=0.0)
    for n_iter in (5, 10, 20):
        est = ALS(rank=3, lam=0.0, n_iter=n_iter, normalize="none").fit(m)
        r = rmse_values(est.predict((m.users, m.items)), m.values)
        print(f"  iters {n_iter}: train rmse {r:.3e}")


def funk_monotonicity():
    print("== FunkSVD history every 10 epochs (50x30, default preset) ==")
    m = low_rank_ratings(50, 30, rank=3, density=0.6, noise=0.3, seed=4)
    est = FunkSVD(rank=3, eta=1e-3, alpha=5e-3, beta=5e-3, n_epochs=100, seed=0).fit(m)
    h = np.asarray(est.history_)
    sampled = h[::10]
    print("  sampled:", np.array2string(sampled, precision=6))
    print("  max increase over sampled:", float(np.max(np.diff(sampled))))
    print("  max increase over all epochs:", float(np.max(np.diff(h))))


def rank_sweep():
    print("== rank sweep on rank-4 synthetic 300x200 (15% observed) ==")
    m = low_rank_ratings(300, 200, rank=4, density=0.15, noise=0.25, seed=9)
    split = split_ratings(m, 0.8, 0)
    tr, va = split.train, split.validation
    ranks = [1, 2, 3, 4, 6, 8, 12, 16, 24, 32]
    from cfkit import SVDBaseline
    for name, make in (
        ("svd", lambda r: SVDBaseline(rank=r)),
        ("als", lambda r: ALS(rank=r, lam=0.1, n_iter=20)),
        ("bfm-r-ui", lambda r: BayesianFM(task="regression", schema="ui", rank=r,
                                          n_iter=150, seed=0)),
    ):
        t0 = time.perf_counter()
        curve = []
        for r in ranks:
            est = make(r).fit(tr)
            curve.append(rmse_values(est.predict((va.users, va.items)), va.values))
        dt = time.perf_counter() - t0
        arg = ranks[int(np.argmin(curve))]
        print(f"  {name}: argmin rank {arg}  ({dt:.1f}s)")
        print("   ", np.array2string(np.asarray(curve), precision=4))


def probit_sanity():
    print("== ordered probit on integer targets (sanity + acceptance shape) ==")
    users, items, y, _ = fm_ground_truth(150, 100, 2000, rank=4, noise=0.1, seed=0)
    yi = np.clip(np.round(y), 1, 5)
    schema = FeatureSchema.from_code("ui")
    m = RatingMatrix(users[:1600], items[:1600], yi[:1600], n_users=150, n_items=100)
    feats = build_features(m, schema)
    qf = build_features_for_pairs(m, schema, users[1600:], items[1600:])
    t0 = time.perf_counter()
    res = bfm_fit_ordered_probit(feats, GibbsRun(rank=8, n_iterations=200, seed=0), qf)
    dt = time.perf_counter() - t0
    inc = np.all(np.diff(res.cutpoints, axis=1) > 0)
    print(f"  pred range [{res.predictions.min():.3f}, {res.predictions.max():.3f}]  "
          f"cutpoints increasing in all samples: {inc}  acc {res.cutpoint_acceptance:.2f}  ({dt:.1f}s)")
    print(f"  held-out rmse vs integer targets {rmse_values(res.predictions, yi[1600:]):.4f}")


def gibbs_scaling():
    print("== Gibbs sweep time vs N_z (ui schema, k=8, 50 sweeps) ==")
    times = {}
    for n_rows in (1000, 2000):
        users, items, y, _ = fm_ground_truth(200, 150, n_rows, rank=4, noise=0.1, seed=1)
        m = RatingMatrix(users, items, y, n_users=200, n_items=150, value_range=None)
        est = BayesianFM(task="regression", schema="ui", rank=8, n_iter=50, seed=1)
        t0 = time.perf_counter()
        est.fit(m)
        est.predict((users[:10], items[:10]))
        times[n_rows] = time.perf_counter() - t0
        print(f"  N={n_rows}: {times[n_rows]:.2f}s")
    print(f"  ratio {times[2000] / times[1000]:.3f}")


def blend_sizing():
    print("== blend acceptance sizing (500x300, 15% observed) ==")
    from cfkit import SimilarityKNN, blend_base_predictions, blend_predict, fit_blender
    m = low_rank_ratings(500, 300, rank=4, density=0.15, noise=0.25, seed=13)
    outer = split_ratings(m, 0.8, 0)
    models = [
        ("bfm-r-uiiuii", BayesianFM(task="regression", schema="uiiuii", rank=16,
                                    n_iter=120, seed=0)),
        ("item-pcc-normal-60", SimilarityKNN(axis="item", measure="pcc",
                                             weighting="normal", k=60)),
    ]
    t0 = time.perf_counter()
    dataset, feats = blend_base_predictions(
        outer.train, models, fraction=0.8, seed=0,
        queries=(outer.validation.users, outer.validation.items))
    b = fit_blender(dataset, "ols")
    dt = time.perf_counter() - t0
    in_rmse = rmse_values(blend_predict(b, dataset.features), dataset.targets)
    cols = [rmse_values(dataset.features[:, j], dataset.targets) for j in range(dataset.n_models)]
    test_rmse = rmse_values(blend_predict(b, feats), outer.validation.values)
    col_test = [rmse_values(feats[:, j], outer.validation.values) for j in range(dataset.n_models)]
    print(f"  blend in-sample {in_rmse:.4f} vs columns {np.round(cols, 4)}")
    print(f"  blend test {test_rmse:.4f} vs columns {np.round(col_test, 4)}  ({dt:.1f}s)")


if __name__ == "__main__":
    bfm_recovery()
    als_exact_fit()
    funk_monotonicity()
    probit_sanity()
    gibbs_scaling()
    rank_sweep()
    blend_sizing()
