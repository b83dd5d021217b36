import numpy as np
import pytest

from qmemlab import ml
from qmemlab.ml import (MLError, SplitSpec, adjusted_r2, benchmark,
                        load_model, make_regressor, r2_score, rmse,
                        save_model, split)


def synthetic(n=300, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(n, 3))
    y = np.sin(3.0 * x[:, 0]) + x[:, 1] ** 2 - 0.5 * x[:, 2]
    if noise:
        y = y + noise * rng.normal(size=n)
    return x, y


# ---------------------------------------------------------------------------
# split and metrics
# ---------------------------------------------------------------------------

def test_split_sizes():
    x, y = synthetic(2000)
    x_tr, y_tr, x_te, y_te = split(x, y, SplitSpec(seed=1))
    assert len(y_tr) == 1333 and len(y_te) == 667


def test_split_three_rows():
    x = np.arange(6.0).reshape(3, 2)
    y = np.arange(3.0)
    x_tr, y_tr, x_te, y_te = split(x, y, SplitSpec(seed=0))
    assert len(y_tr) == 2 and len(y_te) == 1


def test_split_deterministic_and_exhaustive():
    x, y = synthetic(50)
    a = split(x, y, SplitSpec(seed=9))
    b = split(x, y, SplitSpec(seed=9))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[3], b[3])
    together = np.sort(np.concatenate([a[1], a[3]]))
    assert np.array_equal(together, np.sort(y))


def test_r2_perfect_and_mean():
    y = np.array([1.0, 2.0, 3.0])
    assert r2_score(y, y) == 1.0
    assert r2_score(y, np.full(3, y.mean())) == 0.0


def test_r2_hand_example():
    y = np.array([1.0, 2.0, 3.0])
    y_hat = np.array([1.0, 2.0, 4.0])
    assert r2_score(y, y_hat) == pytest.approx(0.5)
    assert rmse(y, y_hat) == pytest.approx(np.sqrt(1.0 / 3.0))
    assert rmse(y, y_hat) == pytest.approx(0.57735, abs=1e-5)


def test_adjusted_r2_hand_example():
    # R^2 = 0.5 at n = 100, p = 2: 1 - 0.5 * 99 / 97
    rng = np.random.default_rng(0)
    y = rng.normal(size=100)
    # predictions with SS_res = 0.5 * SS_tot exactly
    y_hat = y - (y - y.mean()) * np.sqrt(0.5)
    assert r2_score(y, y_hat) == pytest.approx(0.5, rel=1e-12)
    got = adjusted_r2(y, y_hat, p=2)
    assert got == pytest.approx(1.0 - 0.5 * 99.0 / 97.0, rel=1e-12)
    assert got == pytest.approx(0.48969, abs=1e-5)


def test_r2_zero_variance_rejected():
    with pytest.raises(MLError):
        r2_score(np.ones(5), np.ones(5))


# ---------------------------------------------------------------------------
# regressors
# ---------------------------------------------------------------------------

def test_knn_memorizes_training_point():
    x, y = synthetic(40)
    model = make_regressor("knn", k=1).fit(x, y)
    assert np.allclose(model.predict(x), y)


def test_knn_two_neighbor_average():
    x = np.array([[0.0], [1.0], [10.0]])
    y = np.array([0.0, 1.0, 5.0])
    model = make_regressor("knn", k=2).fit(x, y)
    assert model.predict(np.array([[0.4]]))[0] == pytest.approx(0.5)


def test_gp_interpolates_noiselessly():
    x, y = synthetic(60)
    model = make_regressor("gaussian-process", noise=0.0).fit(x, y)
    assert np.max(np.abs(model.predict(x) - y)) < 1e-8


def test_gp_far_field_reverts_to_prior_mean():
    x, y = synthetic(60)
    model = make_regressor("gaussian-process").fit(x, y)
    far = np.full((1, 3), 1e6)
    assert abs(model.predict(far)[0]) < 1e-6


def test_decision_tree_fits_distinct_rows_exactly():
    x, y = synthetic(100)
    model = make_regressor("decision-tree", max_depth=64, min_samples_leaf=1).fit(x, y)
    assert np.max(np.abs(model.predict(x) - y)) < 1e-12


def test_gbdt_round_zero_is_target_mean():
    x, y = synthetic(80)
    model = make_regressor("gbdt", n_rounds=0).fit(x, y)
    assert np.allclose(model.predict(x), y.mean())


def test_gbdt_training_rmse_non_increasing():
    x, y = synthetic(150, noise=0.05)
    model = make_regressor("gbdt", n_rounds=40, max_depth=3).fit(x, y)
    path = np.asarray(model.train_rmse_path)
    assert np.all(np.diff(path) <= 1e-12)


def test_hist_gbdt_equals_exact_gbdt_with_enough_bins():
    rng = np.random.default_rng(3)
    x = rng.choice(np.linspace(-1, 1, 17), size=(120, 3))
    y = np.sin(2 * x[:, 0]) - x[:, 1] * x[:, 2]
    exact = make_regressor("gbdt", n_rounds=25, max_depth=4).fit(x, y)
    hist = make_regressor("hist-gbdt", n_rounds=25, max_depth=4, n_bins=64,
                          goss=False).fit(x, y)
    xt = rng.uniform(-1, 1, size=(50, 3))
    assert np.max(np.abs(exact.predict(xt) - hist.predict(xt))) <= 1e-10


def test_hist_gbdt_goss_still_learns():
    x, y = synthetic(400, seed=2)
    model = make_regressor("hist-gbdt", goss=True, n_rounds=80, max_depth=6,
                           seed=5).fit(x, y)
    assert r2_score(y, model.predict(x)) > 0.95


def test_forest_variance_shrinks_with_more_trees():
    x, y = synthetic(120, seed=4, noise=0.2)
    probe = np.zeros((1, 3))
    def spread(n_trees):
        preds = [make_regressor("random-forest", n_trees=n_trees, max_depth=6,
                                seed=s).fit(x, y).predict(probe)[0]
                 for s in range(12)]
        return np.var(preds)
    assert spread(100) < spread(10)


def test_extra_trees_uses_whole_sample_deterministically():
    x, y = synthetic(90)
    a = make_regressor("extra-trees", n_trees=30, seed=7).fit(x, y).predict(x)
    b = make_regressor("extra-trees", n_trees=30, seed=7).fit(x, y).predict(x)
    assert np.array_equal(a, b)


def test_models_deterministic_under_seed():
    x, y = synthetic(100, noise=0.1)
    xt, _ = synthetic(30, seed=9)
    for kind in ml.REGRESSOR_KINDS:
        p1 = make_regressor(kind, seed=11).fit(x, y).predict(xt)
        p2 = make_regressor(kind, seed=11).fit(x, y).predict(xt)
        assert np.array_equal(p1, p2), kind


def test_fit_rejects_nan():
    x, y = synthetic(20)
    x[3, 1] = np.nan
    for kind in ("decision-tree", "gaussian-process"):
        with pytest.raises(MLError):
            make_regressor(kind).fit(x, y)


def test_predict_requires_fit_and_shape():
    x, y = synthetic(20)
    model = make_regressor("knn")
    with pytest.raises(MLError):
        model.predict(x)
    model.fit(x, y)
    with pytest.raises(MLError):
        model.predict(np.zeros((3, 7)))


def test_unknown_kind_rejected():
    with pytest.raises(MLError):
        make_regressor("boosted-llama")


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kind", ml.REGRESSOR_KINDS)
def test_save_load_roundtrip(tmp_path, kind):
    x, y = synthetic(80, noise=0.05)
    hyper = {"gbdt": {"n_rounds": 15}, "hist-gbdt": {"n_rounds": 15},
             "random-forest": {"n_trees": 12}, "extra-trees": {"n_trees": 12}}
    model = make_regressor(kind, seed=3, **hyper.get(kind, {})).fit(x, y)
    path = tmp_path / f"{kind}.model"
    save_model(model, str(path))
    assert path.read_text().splitlines()[0] == "QMLMODEL1"
    back = load_model(str(path))
    xt, _ = synthetic(25, seed=8)
    assert np.array_equal(model.predict(xt), back.predict(xt))


def test_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.model"
    path.write_text("NOTAMODEL\n{}\n")
    with pytest.raises(MLError):
        load_model(str(path))


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

def test_benchmark_sorted_and_complete():
    x, y = synthetic(240, noise=0.02)
    hyper = {"random-forest": {"n_trees": 20}, "extra-trees": {"n_trees": 20},
             "gbdt": {"n_rounds": 20, "max_depth": 4},
             "hist-gbdt": {"n_rounds": 20, "max_depth": 4}}
    board = benchmark(x, y, SplitSpec(seed=5), hyper=hyper)
    assert len(board.rows) == len(ml.REGRESSOR_KINDS)
    scores = [r.metrics.adjusted_r2 for r in board.rows if r.metrics]
    assert scores == sorted(scores, reverse=True)
    assert all(r.metrics.fit_seconds >= 0.0 for r in board.rows if r.metrics)


def test_benchmark_constant_target_rejects_all():
    x, _ = synthetic(50)
    y = np.full(50, 0.7)
    board = benchmark(x, y, SplitSpec(seed=1))
    assert all(r.metrics is None for r in board.rows)
    assert all("variance" in r.error for r in board.rows)


def test_benchmark_csv_and_text(tmp_path):
    x, y = synthetic(150, noise=0.02)
    hyper = {k: {"n_trees": 10} for k in ("random-forest", "extra-trees")}
    hyper.update({k: {"n_rounds": 10, "max_depth": 4} for k in ("gbdt", "hist-gbdt")})
    board = benchmark(x, y, SplitSpec(seed=2), hyper=hyper)
    path = tmp_path / "board.csv"
    board.to_csv(str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "model,adjusted_r2,r2,rmse,fit_seconds"
    assert len(lines) == 1 + len(board.rows)
    text = board.to_text()
    assert "model" in text and "adj_r2" in text
