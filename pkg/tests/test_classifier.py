import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.tree import DecisionTreeClassifier

from mcudi.classifier import (
    ForestHyperparams,
    RandomForest,
    cross_val_error,
    cross_validate_error,
    important_features,
    predict,
    predict_proba,
    train_forest,
)
from mcudi.data import Scaler
from mcudi.exceptions import (
    ConfigError,
    DimensionMismatchError,
    InsufficientDataError,
    NotFittedError,
    SingleClassError,
)

from _reference_tree import build_tree as reference_build_tree


def noisy_linear(n=400, d=6, seed=0, noise=0.05, rounded=()):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    for j in rounded:
        X[:, j] = np.round(X[:, j])
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    flip = rng.random(n) < noise
    y[flip] = 1 - y[flip]
    return X, y


def gini(p):
    return 2 * p * (1 - p)


def mdi_from_trees(trees, d):
    """Importances recomputed from each node's impurity, size and children."""
    total = np.zeros(d)
    for t in trees:
        n_root = t.n_node_samples[0]
        per_tree = np.zeros(d)
        for node in range(t.n_nodes):
            f = t.feature[node]
            if f < 0:
                continue
            l, r = t.left[node], t.right[node]
            n_t, n_l, n_r = t.n_node_samples[node], t.n_node_samples[l], t.n_node_samples[r]
            dec = n_t / n_root * (t.impurity[node] - n_l / n_t * t.impurity[l]
                                  - n_r / n_t * t.impurity[r])
            per_tree[f] += dec
        total += per_tree
    total /= len(trees)
    return total / total.sum()


def test_trees_match_slow_reference_builder():
    X, y = noisy_linear(n=300, d=7, seed=3, rounded=(5, 6))
    forest = RandomForest(n_trees=12, max_features=3, random_state=11).fit(X, y)
    n = X.shape[0]
    for t, tree in enumerate(forest.trees_):
        rng = np.random.default_rng([11, t])
        idx = rng.integers(0, n, n)
        tree_seed = int(rng.integers(0, 2**63 - 1))
        ref = reference_build_tree(X, y.astype(np.int64), idx, 3, -1, 2, tree_seed)
        got = (tree.feature, tree.threshold, tree.left, tree.right, tree.value,
               tree.n_node_samples, tree.impurity, tree.impurity_decrease)
        for a, b in zip(got, ref):
            np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("seed", range(5))
def test_single_tree_matches_sklearn_decision_tree(seed):
    # sklearn breaks tied gains at random, so compare shallow trees whose
    # nodes are large enough for the best split to be unique
    X, y = noisy_linear(n=250, d=5, seed=seed)
    ours = RandomForest(n_trees=1, max_depth=2, max_features="all", bootstrap=False).fit(X, y)
    sk = DecisionTreeClassifier(max_depth=2, random_state=0).fit(X, y)
    np.testing.assert_allclose(ours.feature_importances_, sk.feature_importances_, atol=1e-12)
    tree = ours.trees_[0]
    assert tree.n_nodes == sk.tree_.node_count
    Xt = np.random.default_rng(5).normal(size=(500, 5))
    np.testing.assert_array_equal(ours.predict(Xt), sk.predict(Xt))


def test_node_impurities_and_sizes_are_consistent():
    X, y = noisy_linear(seed=6)
    forest = RandomForest(n_trees=5, random_state=2).fit(X, y)
    for tree in forest.trees_:
        np.testing.assert_allclose(tree.impurity, gini(tree.value), atol=1e-12)
        assert tree.n_node_samples[0] == X.shape[0]
        split = tree.feature >= 0
        kids = tree.n_node_samples[tree.left[split]] + tree.n_node_samples[tree.right[split]]
        np.testing.assert_array_equal(kids, tree.n_node_samples[split])
        # unbounded depth: every leaf is pure or holds identical rows
        assert np.all(tree.impurity_decrease[split] >= 0)


def test_importances_match_independent_mdi():
    X, y = noisy_linear(seed=7)
    forest = RandomForest(n_trees=20, random_state=5).fit(X, y)
    np.testing.assert_allclose(forest.feature_importances_,
                               mdi_from_trees(forest.trees_, X.shape[1]), atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_importances_nonnegative_and_sum_to_one(seed):
    X, y = noisy_linear(seed=seed, d=8)
    imp = RandomForest(n_trees=15, random_state=seed).fit(X, y).feature_importances_
    assert np.all(imp >= 0)
    assert imp.sum() == pytest.approx(1.0, abs=1e-9)


def test_informative_features_outrank_noise():
    X, y = noisy_linear(n=800, d=8, seed=8, noise=0.0)
    forest = train_forest(X, y, ForestHyperparams(n_trees=30), seed=1)
    imp = forest.feature_importances_
    assert min(imp[0], imp[1]) > max(imp[2:])
    assert important_features(forest).indices == (0, 1)


def test_permutation_consistency_with_all_features():
    X, y = noisy_linear(n=300, d=5, seed=9)
    perm = np.array([3, 0, 4, 1, 2])
    hp = ForestHyperparams(n_trees=10, max_features="all")
    a = train_forest(X, y, hp, seed=4).feature_importances_
    b = train_forest(X[:, perm], y, hp, seed=4).feature_importances_
    np.testing.assert_allclose(b, a[perm], atol=1e-12)


def test_tied_duplicate_columns_go_to_lowest_index():
    X, y = noisy_linear(n=200, d=3, seed=16)
    X = np.column_stack([X[:, 0], X[:, 0], X[:, 1]])
    imp = RandomForest(n_trees=5, max_features="all").fit(X, y).feature_importances_
    assert imp[0] > 0 and imp[1] == 0


def test_constant_features_give_zero_importance_and_prior_prediction():
    X = np.ones((20, 3))
    y = np.array([0] * 15 + [1] * 5)
    forest = RandomForest(n_trees=3, bootstrap=False).fit(X, y)
    assert np.all(forest.feature_importances_ == 0)
    assert important_features(forest).indices == ()
    np.testing.assert_allclose(forest.predict_proba(X)[:, 1], 0.25)


def test_predict_threshold_half_counts_as_failure():
    # one tree, no split possible, class-1 frequency exactly 0.5
    X = np.zeros((4, 1))
    forest = RandomForest(n_trees=1, bootstrap=False).fit(X, [0, 1, 0, 1])
    assert list(forest.predict(X)) == [1, 1, 1, 1]


def test_deterministic_and_seed_sensitive():
    X, y = noisy_linear(seed=10)
    a = train_forest(X, y, ForestHyperparams(n_trees=10), seed=3)
    b = train_forest(X, y, ForestHyperparams(n_trees=10), seed=3)
    c = train_forest(X, y, ForestHyperparams(n_trees=10), seed=4)
    assert a.feature_importances_.tobytes() == b.feature_importances_.tobytes()
    assert a.feature_importances_.tobytes() != c.feature_importances_.tobytes()
    np.testing.assert_array_equal(predict_proba(a, X), a.predict_proba(X)[:, 1])
    np.testing.assert_array_equal(predict(a, X), a.predict(X))


def test_max_depth_limits_tree():
    X, y = noisy_linear(seed=11)
    forest = RandomForest(n_trees=3, max_depth=2).fit(X, y)
    assert all(t.n_nodes <= 7 for t in forest.trees_)


def test_estimator_protocol():
    X, y = noisy_linear(n=120, seed=12)
    rf = RandomForest(n_trees=5, max_depth=3, random_state=2)
    assert clone(rf).get_params() == rf.get_params()
    pipe = make_pipeline(Scaler(), rf).fit(X, y)
    assert pipe.predict(X).shape == (120,)
    assert rf.score(X, y) > 0.7
    proba = rf.predict_proba(X)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    summary = rf.summary()
    assert summary["seed"] == 2 and len(summary["feature_importances"]) == X.shape[1]


def test_errors():
    X, y = noisy_linear(n=50, seed=13)
    with pytest.raises(NotFittedError):
        RandomForest().predict(X)
    with pytest.raises(SingleClassError):
        RandomForest(n_trees=2).fit(X, np.zeros(50))
    with pytest.raises(InsufficientDataError):
        RandomForest(n_trees=2).fit(X[:1], y[:1])
    with pytest.raises(DimensionMismatchError):
        RandomForest(n_trees=2).fit(X, y).predict(X[:, :3])
    with pytest.raises(ConfigError):
        RandomForest(n_trees=0).fit(X, y)
    with pytest.raises(ConfigError):
        ForestHyperparams(max_features="log2")
    with pytest.raises(ConfigError):
        ForestHyperparams.from_dict({"trees": 5})


@pytest.mark.parametrize("mf,d,want", [("sqrt", 19, 4), ("sqrt", 1, 1), ("all", 7, 7),
                                       (0.5, 9, 4), (3, 2, 2)])
def test_resolve_max_features(mf, d, want):
    assert ForestHyperparams(max_features=mf).resolve_max_features(d) == want


def test_important_features_strictly_above_mean():
    class Stub:
        feature_importances_ = np.array([0.25, 0.25, 0.25, 0.25])

    assert important_features(Stub()).indices == ()
    Stub.feature_importances_ = np.array([0.4, 0.2, 0.2, 0.2])
    sel = important_features(Stub())
    assert sel.indices == (0,) and sel.threshold == pytest.approx(0.25)
    # rounding noise around a uniform vector is not "above average"
    Stub.feature_importances_ = np.full(7, 1 / 7)
    assert important_features(Stub()).indices == ()


def test_leave_one_out_error_matches_explicit_loop():
    X, y = noisy_linear(n=30, d=3, seed=14, noise=0.15)
    hp = ForestHyperparams(n_trees=5, max_features="all", bootstrap=False)
    got = cross_validate_error(X, y, folds=30, hp=hp, seed=0)
    wrong = 0
    for i in range(30):
        keep = np.arange(30) != i
        m = train_forest(X[keep], y[keep], hp, seed=0)
        wrong += int(m.predict(X[i:i + 1])[0] != y[i])
    assert got.error == wrong / 30
    assert got.n_skipped == 0 and got.n_evaluated == 30


def test_cross_validation_skips_single_class_folds():
    X = np.arange(20, dtype=float).reshape(-1, 1)
    y = np.zeros(20, dtype=int)
    y[0] = 1
    res = cross_validate_error(X, y, folds=10, hp=ForestHyperparams(n_trees=2), seed=0)
    assert res.n_skipped == 1
    assert res.n_evaluated == 18


def test_cross_validation_errors():
    X, y = noisy_linear(n=8, seed=15)
    with pytest.raises(InsufficientDataError):
        cross_val_error(X, y, folds=10)
    with pytest.raises(ConfigError):
        cross_val_error(X, y, folds=1)


def test_sign_label_with_noise_feature():
    rng = np.random.default_rng(17)
    X = rng.normal(size=(300, 2))
    y = (X[:, 0] > 0).astype(int)
    imp = train_forest(X, y, ForestHyperparams(n_trees=20)).feature_importances_
    assert imp[0] > imp[1]


def test_xor_with_constant_feature():
    rng = np.random.default_rng(18)
    X = np.column_stack([rng.integers(0, 2, 400), rng.integers(0, 2, 400), np.full(400, 3.0)])
    y = (X[:, 0].astype(int) ^ X[:, 1].astype(int))
    forest = train_forest(X, y, ForestHyperparams(n_trees=20), seed=2)
    assert forest.feature_importances_[2] == 0.0
    assert forest.score(X, y) == 1.0


def traverse(tree, x):
    node = 0
    while tree.feature[node] >= 0:
        node = tree.left[node] if x[tree.feature[node]] <= tree.threshold[node] \
            else tree.right[node]
    return tree.value[node]


def test_probability_is_mean_of_individual_trees():
    X, y = noisy_linear(n=200, seed=19)
    Xt = np.random.default_rng(20).normal(size=(50, X.shape[1]))
    forest = train_forest(X, y, ForestHyperparams(n_trees=100), seed=6)
    want = np.array([np.mean([traverse(t, x) for t in forest.trees_]) for x in Xt])
    np.testing.assert_allclose(predict_proba(forest, Xt), want, rtol=0, atol=1e-12)
    one = RandomForest(n_trees=1).fit(X, y)
    np.testing.assert_array_equal(one.predict_proba(Xt)[:, 1],
                                  [traverse(one.trees_[0], x) for x in Xt])


def test_unanimous_trees_give_probability_one():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    forest = RandomForest(n_trees=10, bootstrap=False).fit(X, [0, 0, 1, 1])
    assert forest.predict_proba([[5.0]])[0, 1] == 1.0


def test_important_features_published_example():
    class Stub:
        feature_importances_ = np.array([0.6, 0.3, 0.1])

    assert important_features(Stub()).indices == (0,)


def test_disk_like_importance_cardinality():
    from mcudi.synthetic import SyntheticConfig, generate_synthetic_stream

    # 19 features, 7 of them drive the failure label
    cfg = SyntheticConfig(19, 1, 2000, tuple(range(7)), label_noise=0.05)
    b = generate_synthetic_stream(cfg, seed=0).batches[0]
    selected = important_features(train_forest(b.features, b.labels, seed=0)).indices
    assert 5 <= len(selected) <= 9
    assert set(selected) <= set(range(7))


def test_cross_validation_on_separable_and_random_labels():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(1000, 3))
    sep = (X[:, 0] > 0).astype(int)
    assert cross_val_error(X, sep, hp=ForestHyperparams(n_trees=10)) < 0.02
    noise = rng.integers(0, 2, 1000)
    assert abs(cross_val_error(X, noise, hp=ForestHyperparams(n_trees=25)) - 0.5) <= 0.1


def test_leave_one_out_on_ten_rows_by_hand():
    # with one feature, all rows used and all features tried, every tree is the
    # same 1-D tree; leaving out row i, the forest predicts the class of the
    # region x_i falls in
    X = np.array([[0.0], [1], [2], [3], [4], [5], [6], [7], [8], [9]])
    y = np.array([0, 0, 0, 1, 0, 1, 1, 1, 1, 1])
    hp = ForestHyperparams(n_trees=1, max_features="all", bootstrap=False)
    # without row 3 the boundary sits at 4.5, so x=3 lands with class 0; without
    # row 4 it sits at 2.5 and x=4 lands with class 1; without row 5 the split
    # between 4 and 6 is at exactly 5.0 and "<=" sends x=5 left to class 0.
    # Every other row is flanked by its own class.
    assert cross_val_error(X, y, folds=10, hp=hp) == 3 / 10
