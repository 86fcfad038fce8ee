"""Random-forest failure classifier with mean-decrease-in-impurity importances.

``RandomForest`` follows the scikit-learn estimator protocol (``fit``,
``predict``, ``predict_proba``, ``get_params``), so it can sit inside a
``Pipeline``. The functional helpers (``train_forest``, ``cross_val_error``,
``important_features``) are what the drift pipeline calls.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import _tree_kernels
from ._validation import (
    as_binary_labels,
    as_features,
    check_both_classes,
    check_is_fitted,
    check_n_features,
)
from .exceptions import ConfigError, InsufficientDataError, SingleClassError
from .metrics import error_rate

logger = logging.getLogger(__name__)

__all__ = [
    "ForestHyperparams",
    "Tree",
    "RandomForest",
    "ImportantFeatureSet",
    "CrossValResult",
    "train_forest",
    "predict_proba",
    "predict",
    "cross_validate_error",
    "cross_val_error",
    "important_features",
    "error_rate",
]


@dataclass(frozen=True)
class ForestHyperparams:
    """Forest settings.

    ``max_features`` is the number of features tried per split: ``"sqrt"``
    (floor of sqrt(d), at least 1), ``"all"``, an int, or a fraction in (0, 1].
    """

    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    max_features: Union[str, int, float] = "sqrt"
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError("n_trees must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be a positive integer or None")
        if self.min_samples_split < 2:
            raise ConfigError("min_samples_split must be >= 2")
        mf = self.max_features
        if isinstance(mf, str):
            if mf not in ("sqrt", "all"):
                raise ConfigError(f"unknown max_features rule {mf!r}")
        elif isinstance(mf, bool) or not isinstance(mf, (int, float)):
            raise ConfigError(f"bad max_features {mf!r}")
        elif isinstance(mf, int) and mf < 1:
            raise ConfigError("max_features must be >= 1")
        elif isinstance(mf, float) and not 0.0 < mf <= 1.0:
            raise ConfigError("fractional max_features must lie in (0, 1]")

    def resolve_max_features(self, d):
        mf = self.max_features
        if mf == "sqrt":
            return max(1, int(math.sqrt(d)))
        if mf == "all":
            return d
        if isinstance(mf, float):
            return max(1, int(mf * d))
        return min(mf, d)

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad hyperparameters: {exc}") from None

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Tree:
    """One fitted tree as parallel node arrays (leaves have ``feature == -1``).

    ``value`` is the class-1 frequency at the node, ``impurity`` its Gini
    impurity, ``n_node_samples`` the (resampled) row count reaching it and
    ``impurity_decrease`` the weighted decrease its split achieved,
    ``N_t / N * (G_t - N_l/N_t * G_l - N_r/N_t * G_r)``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_node_samples: np.ndarray
    impurity: np.ndarray
    impurity_decrease: np.ndarray

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    @property
    def n_splits(self):
        return int((self.feature >= 0).sum())

    def leaf_values(self, X):
        return _tree_kernels.tree_leaf_values(
            self.feature, self.threshold, self.left, self.right, self.value, X
        )

    def total_decrease(self, n_features):
        split = self.feature >= 0
        return np.bincount(self.feature[split], weights=self.impurity_decrease[split],
                           minlength=n_features)


class RandomForest(ClassifierMixin, BaseEstimator):
    """Bagged binary Gini trees.

    Tree ``t`` draws its bootstrap rows and per-node feature subsets from a
    stream seeded by ``(random_state, t)``, so a fit is reproducible and does
    not depend on the order trees are grown in. Ties between equally good
    splits go to the lowest threshold value, then the lowest feature index,
    so renaming (permuting) columns does not change which split wins.

    Attributes
    ----------
    trees_ : list of Tree
    feature_importances_ : ndarray of shape (n_features,)
        Per-feature impurity decrease summed within each tree, averaged over
        trees and normalized to sum to 1 (all zeros if no tree split).
    """

    def __init__(self, n_trees=100, max_depth=None, min_samples_split=2,
                 max_features="sqrt", bootstrap=True, random_state=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_state = random_state

    @property
    def hyperparams(self):
        return ForestHyperparams(self.n_trees, self.max_depth, self.min_samples_split,
                                 self.max_features, self.bootstrap)

    def fit(self, X, y):
        hp = self.hyperparams
        seed = self.random_state
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
            raise ConfigError("random_state must be a non-negative integer")
        X = as_features(X)
        y = as_binary_labels(y, n=X.shape[0])
        if X.shape[0] < 2:
            raise InsufficientDataError("training needs at least 2 rows")
        check_both_classes(y, what="training labels")

        n, d = X.shape
        order = np.argsort(X, axis=0, kind="stable")
        max_features = hp.resolve_max_features(d)
        max_depth = -1 if hp.max_depth is None else hp.max_depth
        trees = []
        for t in range(hp.n_trees):
            rng = np.random.default_rng([int(seed), t])
            if hp.bootstrap:
                counts = np.bincount(rng.integers(0, n, n), minlength=n)
            else:
                counts = np.ones(n, dtype=np.int64)
            tree_seed = int(rng.integers(0, 2**63 - 1))
            arrays = _tree_kernels.build_tree(X, y, order, counts, max_features, max_depth,
                                              hp.min_samples_split, tree_seed)
            trees.append(Tree(*arrays))

        total = np.zeros(d)
        for tree in trees:
            total += tree.total_decrease(d)
        total /= len(trees)
        s = total.sum()
        self.feature_importances_ = total / s if s > 0 else total
        self.trees_ = trees
        self.n_features_in_ = d
        self.classes_ = np.array([0, 1])
        return self

    def _failure_proba(self, X):
        check_is_fitted(self, "trees_")
        X = as_features(X)
        check_n_features(X, self.n_features_in_)
        acc = np.zeros(X.shape[0])
        for tree in self.trees_:
            acc += tree.leaf_values(X)
        return acc / len(self.trees_)

    def predict_proba(self, X):
        p = self._failure_proba(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        # probability exactly 0.5 counts as failure
        return (self._failure_proba(X) >= 0.5).astype(np.int64)

    def summary(self):
        """JSON-ready audit record of the fitted model."""
        check_is_fitted(self, "trees_")
        return {
            "seed": int(self.random_state),
            "hyperparams": self.hyperparams.to_dict(),
            "n_features": int(self.n_features_in_),
            "feature_importances": [float(v) for v in self.feature_importances_],
            "n_splits": sum(t.n_splits for t in self.trees_),
        }


def train_forest(features, labels, hp=None, seed=0):
    hp = hp or ForestHyperparams()
    return RandomForest(random_state=seed, **hp.to_dict()).fit(features, labels)


def predict_proba(model, features):
    """Failure probability per row (mean of the trees' leaf frequencies)."""
    return model.predict_proba(features)[:, 1]


def predict(model, features):
    return model.predict(features)


@dataclass(frozen=True)
class ImportantFeatureSet:
    indices: tuple
    threshold: float


def important_features(model):
    """Features whose importance is strictly above the mean importance.

    Works with any fitted estimator exposing ``feature_importances_``.
    Uniform importances give an empty set.
    """
    imp = np.asarray(model.feature_importances_, dtype=np.float64)
    mean = float(imp.mean())
    # values equal to the mean up to rounding in the mean itself are not "above"
    tol = 4 * np.finfo(np.float64).eps * max(1.0, abs(mean))
    idx = tuple(int(j) for j in np.flatnonzero(imp > mean + tol))
    return ImportantFeatureSet(indices=idx, threshold=mean)


@dataclass(frozen=True)
class CrossValResult:
    error: float
    n_folds: int
    n_skipped: int
    n_evaluated: int


def cross_validate_error(features, labels, folds=10, hp=None, seed=0):
    """Pooled k-fold misclassification rate.

    Rows are shuffled once with ``seed`` and cut into ``folds`` contiguous
    parts. Folds whose training part holds a single class are skipped and
    counted; the error pools all held-out predictions of the other folds.
    """
    X = as_features(features)
    y = as_binary_labels(labels, n=X.shape[0])
    n = X.shape[0]
    if folds < 2:
        raise ConfigError("folds must be >= 2")
    if n < folds:
        raise InsufficientDataError(f"{n} rows cannot be split into {folds} folds")
    check_both_classes(y, what="cross-validation labels")

    perm = np.random.default_rng(seed).permutation(n)
    mismatches = 0
    evaluated = 0
    skipped = 0
    for held in np.array_split(perm, folds):
        train = np.setdiff1d(perm, held, assume_unique=True)
        y_train = y[train]
        if y_train.min() == y_train.max():
            skipped += 1
            continue
        model = train_forest(X[train], y_train, hp, seed)
        mismatches += int((model.predict(X[held]) != y[held]).sum())
        evaluated += held.size
    if evaluated == 0:
        raise SingleClassError("every cross-validation fold had a single-class training split")
    if skipped:
        logger.info("cross-validation skipped %d of %d folds (single-class training split)",
                    skipped, folds)
    return CrossValResult(mismatches / evaluated, folds, skipped, evaluated)


def cross_val_error(features, labels, folds=10, hp=None, seed=0):
    return cross_validate_error(features, labels, folds, hp, seed).error

