"""Classification metrics."""

import numpy as np
from scipy.stats import rankdata

from ._validation import as_binary_labels, check_both_classes
from .exceptions import DataError, DimensionMismatchError, SingleClassError


def error_rate(predictions, labels):
    """Fraction of positions where ``predictions`` and ``labels`` disagree."""
    pred = as_binary_labels(predictions, name="predictions")
    y = as_binary_labels(labels, name="labels")
    if pred.shape != y.shape:
        raise DimensionMismatchError(
            f"predictions ({pred.size}) and labels ({y.size}) differ in length"
        )
    return float(np.count_nonzero(pred != y)) / y.size


def roc_auc(scores, labels):
    """Area under the ROC curve via the rank-sum (Mann-Whitney) formula.

    Equals the probability that a random positive scores above a random
    negative, with ties counted as one half.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = as_binary_labels(labels)
    if s.size != y.size:
        raise DimensionMismatchError("scores and labels differ in length")
    if not np.isfinite(s).all():
        raise DataError("scores contain NaN or infinite values")
    try:
        check_both_classes(y)
    except SingleClassError:
        raise SingleClassError("ROC AUC is undefined when labels hold a single class") from None
    ranks = rankdata(s)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))
