"""Input validation helpers shared by the estimators and functional API."""

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    DataError,
    EmptyInputError,
    NotFittedError,
    SingleClassError,
)


def as_features(X, *, name="X"):
    """Return ``X`` as a finite, C-contiguous float64 matrix.

    Accepts anything array-like with two dimensions, or a ``Batch``.
    """
    X = getattr(X, "features", X)
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] == 0:
        raise EmptyInputError(f"{name} has no rows")
    if X.shape[1] == 0:
        raise DataError(f"{name} has no feature columns")
    if not np.isfinite(X).all():
        raise DataError(f"{name} contains NaN or infinite values")
    return X


def as_binary_labels(y, *, n=None, name="y"):
    y = np.asarray(y)
    if y.ndim != 1:
        raise DataError(f"{name} must be 1-dimensional, got shape {y.shape}")
    if y.size == 0:
        raise EmptyInputError(f"{name} is empty")
    if not np.isin(y, (0, 1)).all():
        raise DataError(f"{name} must contain only 0/1 values")
    if n is not None and y.shape[0] != n:
        raise DimensionMismatchError(f"{name} has {y.shape[0]} entries, expected {n}")
    return y.astype(np.int64)


def check_both_classes(y, *, what="labels"):
    n_pos = int(np.count_nonzero(y))
    if n_pos == 0 or n_pos == len(y):
        raise SingleClassError(f"{what} contain a single class")


def check_n_features(X, n_features, *, name="X"):
    if X.shape[1] != n_features:
        raise DimensionMismatchError(
            f"{name} has {X.shape[1]} features, expected {n_features}"
        )


def check_is_fitted(estimator, attribute):
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
