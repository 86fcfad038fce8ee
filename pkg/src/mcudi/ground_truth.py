"""Drift / non-drift ground truth from the classifier's error rates.

For consecutive periods (P1, P2): the training error is the 10-fold
cross-validated error on P1, the testing error is that of a forest trained on
all of P1 and scored on P2. A two-proportion Z-test on the two error rates
decides drift for one seed; a period is labeled drift when more than half of
the seeds say so.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .classifier import ForestHyperparams, cross_val_error, train_forest
from .exceptions import DataError
from .metrics import error_rate
from .stats import ZTestResult, z_test_two_proportion

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_SEEDS",
    "PairDecision",
    "GroundTruthLabel",
    "label_batch_pair",
    "majority_vote",
    "label_all_batches",
]

DEFAULT_SEEDS = (0, 1, 2, 3, 4, 5, 6, 7, 8, 9)

SINGLE_CLASS_TRAIN = "single-class training period"
SINGLE_CLASS_TEST = "single-class testing period"


@dataclass(frozen=True)
class PairDecision:
    """Single-seed drift decision for one (train, test) batch pair."""

    seed: int
    drift: Optional[bool]
    eps_train: float = math.nan
    eps_test: float = math.nan
    severity: float = math.nan
    z_test: Optional[ZTestResult] = None
    excluded: bool = False
    reason: Optional[str] = None


@dataclass(frozen=True)
class GroundTruthLabel:
    period_id: int
    votes: tuple
    n_seeds: int
    is_drift: Optional[bool]
    mean_severity: float
    drift_severity: float
    excluded: bool = False
    reason: Optional[str] = None
    period_label: Optional[str] = None
    decisions: tuple = ()

    @property
    def drift_votes(self):
        return sum(self.votes)

    def to_record(self):
        return {
            "period_id": self.period_id,
            "period_label": self.period_label,
            "votes": [int(v) for v in self.votes],
            "drift_votes": self.drift_votes,
            "n_seeds": self.n_seeds,
            "is_drift": self.is_drift,
            "mean_severity": self.mean_severity,
            "drift_severity": self.drift_severity,
            "excluded": self.excluded,
            "reason": self.reason,
            "eps_train": [d.eps_train for d in self.decisions],
            "eps_test": [d.eps_test for d in self.decisions],
            "z": [None if d.z_test is None else d.z_test.z for d in self.decisions],
        }

    @classmethod
    def from_record(cls, rec):
        return cls(
            period_id=int(rec["period_id"]),
            votes=tuple(bool(v) for v in rec["votes"]),
            n_seeds=int(rec["n_seeds"]),
            is_drift=rec["is_drift"],
            mean_severity=math.nan if rec["mean_severity"] is None else rec["mean_severity"],
            drift_severity=math.nan if rec["drift_severity"] is None else rec["drift_severity"],
            excluded=bool(rec["excluded"]),
            reason=rec["reason"],
            period_label=rec.get("period_label"),
        )


def label_batch_pair(train, test, hp=None, seed=0, folds=10, alpha=0.05):
    """Decide drift between two labeled batches for one seed.

    Pairs where either batch holds a single class come back excluded with a
    reason instead of a decision.
    """
    if train.labels is None or test.labels is None:
        raise DataError("ground truth needs labeled batches")
    if not train.has_both_classes:
        return PairDecision(seed, None, excluded=True, reason=SINGLE_CLASS_TRAIN)
    if not test.has_both_classes:
        return PairDecision(seed, None, excluded=True, reason=SINGLE_CLASS_TEST)

    hp = hp or ForestHyperparams()
    eps_train = cross_val_error(train.features, train.labels, folds, hp, seed)
    model = train_forest(train.features, train.labels, hp, seed)
    eps_test = error_rate(model.predict(test.features), test.labels)
    zt = z_test_two_proportion(eps_train, eps_test, train.n, test.n, alpha)
    return PairDecision(seed, zt.drift, eps_train, eps_test, zt.severity, zt)


def majority_vote(votes, n_seeds):
    """Strict majority of all seeds: 6 of 10 is drift, 5 of 10 is not."""
    return sum(bool(v) for v in votes) > n_seeds / 2


def _nanmean(values):
    vals = [v for v in values if not math.isnan(v)]
    return float(np.mean(vals)) if vals else math.nan


def label_all_batches(batches, hp=None, seeds=DEFAULT_SEEDS, folds=10, alpha=0.05):
    """Ground truth for every batch after the first (which has no predecessor).

    ``mean_severity`` averages the severity over all seeds that produced a
    decision; ``drift_severity`` averages only over seeds that voted drift.
    """
    if len(batches) < 2:
        raise DataError("ground truth needs at least two batches")
    seeds = tuple(seeds)
    if not seeds:
        raise DataError("at least one seed is required")

    labels = []
    for prev, cur in zip(batches[:-1], batches[1:]):
        decisions = tuple(label_batch_pair(prev, cur, hp, s, folds, alpha) for s in seeds)
        kept = [d for d in decisions if not d.excluded]
        if not kept:
            reason = decisions[0].reason
            logger.info("period %s excluded: %s", cur.period_id, reason)
            labels.append(GroundTruthLabel(
                cur.period_id, (), len(seeds), None, math.nan, math.nan,
                excluded=True, reason=reason, period_label=cur.period_label,
                decisions=decisions,
            ))
            continue
        votes = tuple(bool(d.drift) for d in kept)
        labels.append(GroundTruthLabel(
            period_id=cur.period_id,
            votes=votes,
            n_seeds=len(seeds),
            is_drift=majority_vote(votes, len(seeds)),
            mean_severity=_nanmean([d.severity for d in kept]),
            drift_severity=_nanmean([d.severity for d in kept if d.drift]),
            period_label=cur.period_label,
            decisions=decisions,
        ))
    return labels
