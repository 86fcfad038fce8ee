"""Scoring detectors and simulating retraining strategies.

Confusion-matrix convention
---------------------------
Detection accuracy reports *specificity* as the share of true drifts the
detector alarmed on and *sensitivity* as the share of non-drift periods it
stayed quiet on. With ``specificity = TN / (TN + FP)`` and
``sensitivity = TP / (TP + FN)`` that makes the non-drift period the positive
class:

====================  ==========  ===========
truth \\ detector      alarm       no alarm
====================  ==========  ===========
drift                 TN          FP
non-drift             FN          TP
====================  ==========  ===========

An always-alarming detector therefore scores specificity 1.0 and
sensitivity 0.0. Undefined ratios (empty denominators) are NaN, never 0.
"""

import logging
import math
from dataclasses import dataclass, field
import numpy as np

from .classifier import ForestHyperparams, train_forest
from .detectors import DETECTOR_NAMES, make_detector
from .exceptions import AlignmentError, ConfigError, DataError, SingleClassError
from .ground_truth import DEFAULT_SEEDS
from .metrics import roc_auc

logger = logging.getLogger(__name__)

__all__ = [
    "DetectionAccuracy",
    "DetectorEvaluation",
    "StrategyRunReport",
    "LabelCostReport",
    "score_detector",
    "pairwise_verdicts",
    "evaluate_detector",
    "run_strategy",
    "run_label_cost_pipeline",
]


def _ratio(num, den):
    return num / den if den else math.nan


@dataclass(frozen=True)
class DetectionAccuracy:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def specificity(self):
        return _ratio(self.tn, self.tn + self.fp)

    @property
    def sensitivity(self):
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def balanced_accuracy(self):
        return (self.sensitivity + self.specificity) / 2

    @property
    def n_scored(self):
        return self.tp + self.tn + self.fp + self.fn

    def to_record(self):
        return {
            "tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn,
            "specificity": self.specificity,
            "sensitivity": self.sensitivity,
            "balanced_accuracy": self.balanced_accuracy,
        }


def score_detector(alarms, truth):
    """Confusion counts of per-period alarms against ground truth.

    ``alarms`` maps period id to a bool (or a ``DriftVerdict``). It must
    cover every non-excluded ground-truth period; alarms on excluded periods
    are ignored, alarms on unknown periods are an error.
    """
    alarms = {int(k): bool(getattr(v, "alarm", v)) for k, v in alarms.items()}
    known = {g.period_id for g in truth}
    unknown = sorted(set(alarms) - known)
    if unknown:
        raise AlignmentError(f"verdicts for periods without ground truth: {unknown}")
    tp = tn = fp = fn = 0
    for g in truth:
        if g.excluded:
            continue
        if g.period_id not in alarms:
            raise AlignmentError(f"no verdict for period {g.period_id}")
        alarm = alarms[g.period_id]
        if g.is_drift:
            if alarm:
                tn += 1
            else:
                fp += 1
        elif alarm:
            fn += 1
        else:
            tp += 1
    return DetectionAccuracy(tp, tn, fp, fn)


def _index_by_period(batches):
    return {b.period_id: i for i, b in enumerate(batches)}


def pairwise_verdicts(batches, truth, detector, hp=None, seed=0, alpha=0.05):
    """Verdict per non-excluded truth period, comparing it with its predecessor.

    For ``mcudi`` the model is a forest trained on the predecessor batch with
    ``seed``, i.e. the model the ground-truth pipeline evaluates.
    """
    if detector not in DETECTOR_NAMES:
        raise ConfigError(f"unknown detector {detector!r}")
    pos = _index_by_period(batches)
    out = {}
    for g in truth:
        if g.excluded:
            continue
        i = pos.get(g.period_id)
        if i is None or i == 0:
            raise AlignmentError(f"period {g.period_id} has no predecessor batch")
        train, test = batches[i - 1], batches[i]
        model = None
        if detector == "mcudi":
            model = train_forest(train.features, train.labels, hp, seed)
        out[g.period_id] = make_detector(detector, model, alpha) \
            .fit(train.features).detect(test.features)
    return out


@dataclass(frozen=True)
class DetectorEvaluation:
    """Detection accuracy of one detector, per seed and averaged over seeds."""

    detector: str
    seeds: tuple
    per_seed: tuple
    verdicts: tuple = field(repr=False, default=())

    @property
    def specificity(self):
        return float(np.mean([a.specificity for a in self.per_seed]))

    @property
    def sensitivity(self):
        return float(np.mean([a.sensitivity for a in self.per_seed]))

    @property
    def balanced_accuracy(self):
        return (self.specificity + self.sensitivity) / 2

    def to_record(self):
        return {
            "detector": self.detector,
            "seeds": list(self.seeds),
            "specificity": self.specificity,
            "sensitivity": self.sensitivity,
            "balanced_accuracy": self.balanced_accuracy,
            "per_seed": [a.to_record() for a in self.per_seed],
        }


def evaluate_detector(batches, truth, detector, hp=None, seeds=DEFAULT_SEEDS, alpha=0.05):
    seeds = tuple(seeds)
    per_seed, verdicts = [], []
    for s in seeds:
        v = pairwise_verdicts(batches, truth, detector, hp, s, alpha)
        verdicts.append(v)
        per_seed.append(score_detector(v, truth))
    return DetectorEvaluation(detector, seeds, tuple(per_seed), tuple(verdicts))


@dataclass(frozen=True)
class StrategyRunReport:
    """Outcome of simulating one retraining strategy over the batch sequence.

    ``mean_roc_auc`` weights every scored (seed, period) equally;
    ``weighted_roc_auc`` weights by period size. ``retrain_count`` and
    ``label_cost`` are means over seeds; the per-seed values are kept too.
    ``label_cost`` counts samples newly annotated for retraining (the initial
    training batch is not counted).
    """

    strategy: str
    window: int
    accumulate: bool
    seeds: tuple
    total_periods: int
    mean_roc_auc: float
    weighted_roc_auc: float
    retrain_count: float
    label_cost: int
    retrain_counts: tuple
    label_costs: tuple
    period_aucs: tuple = field(repr=False, default=())
    verdict_log: tuple = field(repr=False, default=())

    def to_record(self):
        return {
            "strategy": self.strategy,
            "window": self.window,
            "accumulate": self.accumulate,
            "seeds": list(self.seeds),
            "total_periods": self.total_periods,
            "mean_roc_auc": self.mean_roc_auc,
            "weighted_roc_auc": self.weighted_roc_auc,
            "retrain_count": self.retrain_count,
            "retrain_counts": list(self.retrain_counts),
            "label_cost": self.label_cost,
            "label_costs": list(self.label_costs),
        }


def _concat(batches, idx):
    X = np.concatenate([batches[i].features for i in idx])
    y = np.concatenate([batches[i].labels for i in idx])
    return X, y


def _run_one_seed(batches, strategy, hp, seed, window, alpha, accumulate):
    start = next((i for i, b in enumerate(batches) if b.has_both_classes), None)
    if start is None:
        raise SingleClassError("no batch holds both classes; nothing can be trained")
    if start > 0:
        logger.warning("skipping %d leading single-class period(s) before training", start)
    win = [start]
    X_win, y_win = _concat(batches, win)
    model = train_forest(X_win, y_win, hp, seed)
    annotated = {start}
    aucs, log = {}, []
    retrains = 0
    cost = 0
    for t in range(start + 1, len(batches)):
        test = batches[t]
        if test.has_both_classes:
            aucs[test.period_id] = roc_auc(model.predict_proba(test.features)[:, 1],
                                           test.labels)
        else:
            logger.info("period %s is single-class; skipped for ROC AUC", test.period_id)
        verdict = make_detector(strategy, model, alpha).fit(X_win).detect(test.features)
        log.append(verdict.to_record(seed=seed, period_id=test.period_id,
                                     training_window=[batches[i].period_id for i in win],
                                     n_samples=test.n))
        if not verdict.alarm:
            continue
        retrains += 1
        first = start if accumulate else max(start, t - window + 1)
        win = list(range(first, t + 1))
        for i in win:
            if i not in annotated:
                annotated.add(i)
                cost += batches[i].n
        X_new, y_new = _concat(batches, win)
        if y_new.min() == y_new.max():
            logger.warning("training window ending at period %s is single-class; "
                           "keeping the previous model", test.period_id)
            continue
        X_win = X_new
        model = train_forest(X_new, y_new, hp, seed)
    return aucs, retrains, cost, log


def run_strategy(batches, strategy, hp=None, seeds=DEFAULT_SEEDS, window=1, alpha=0.05,
                 accumulate=False):
    """Simulate ``strategy`` (static, periodic, ks, mcudi) over ``batches``.

    Per seed, a forest is trained on the first batch. Each following batch is
    scored (ROC AUC) with the current model, then the strategy decides
    whether to retrain; detectors compare the current training window with
    the incoming batch. A retrain slides the window to the most recent
    ``window`` batches, or with ``accumulate`` grows it to every batch seen so
    far.
    """
    if strategy not in DETECTOR_NAMES:
        raise ConfigError(f"unknown strategy {strategy!r}")
    if window < 1:
        raise ConfigError("window must be >= 1")
    if len(batches) < 2:
        raise DataError("a strategy run needs at least two batches")
    if any(b.labels is None for b in batches):
        raise DataError("strategy runs need labeled batches")
    hp = hp or ForestHyperparams()
    seeds = tuple(seeds)

    all_aucs, counts, costs, logs = [], [], [], []
    for s in seeds:
        aucs, retrains, cost, log = _run_one_seed(batches, strategy, hp, s, window, alpha,
                                                  accumulate)
        all_aucs.append(aucs)
        counts.append(retrains)
        costs.append(cost)
        logs.extend(log)

    sizes = {b.period_id: b.n for b in batches}
    flat = [(a, sizes[p]) for aucs in all_aucs for p, a in aucs.items()]
    mean_auc = float(np.mean([a for a, _ in flat])) if flat else math.nan
    weighted = float(np.average([a for a, _ in flat], weights=[w for _, w in flat])) \
        if flat else math.nan
    return StrategyRunReport(
        strategy=strategy,
        window=window,
        accumulate=accumulate,
        seeds=seeds,
        total_periods=len(batches) - 1,
        mean_roc_auc=mean_auc,
        weighted_roc_auc=weighted,
        retrain_count=float(np.mean(counts)),
        label_cost=int(round(float(np.mean(costs)))),
        retrain_counts=tuple(counts),
        label_costs=tuple(costs),
        period_aucs=tuple(all_aucs),
        verdict_log=tuple(logs),
    )


@dataclass(frozen=True)
class LabelCostReport:
    """McUDI-gated maintenance versus periodic retraining."""

    mcudi: StrategyRunReport
    periodic: StrategyRunReport

    @property
    def savings_per_seed(self):
        return tuple(p - m for p, m in zip(self.periodic.label_costs, self.mcudi.label_costs))

    @property
    def savings(self):
        return float(np.mean(self.savings_per_seed))

    @property
    def auc_gap(self):
        return self.periodic.mean_roc_auc - self.mcudi.mean_roc_auc

    def to_record(self):
        return {
            "mcudi": self.mcudi.to_record(),
            "periodic": self.periodic.to_record(),
            "savings": self.savings,
            "savings_per_seed": list(self.savings_per_seed),
            "auc_gap": self.auc_gap,
        }


def run_label_cost_pipeline(batches, hp=None, seeds=DEFAULT_SEEDS, window=1, alpha=0.05,
                            accumulate=False):
    """Compare annotation cost of McUDI-gated retraining with periodic retraining.

    The McUDI arm annotates a batch only when McUDI flags it and retrains on
    that batch alone; unflagged batches are never labeled. The periodic arm
    annotates every testing batch and retrains on the most recent ``window``
    batches.
    """
    return LabelCostReport(
        mcudi=run_strategy(batches, "mcudi", hp, seeds, window=1, alpha=alpha),
        periodic=run_strategy(batches, "periodic", hp, seeds, window=window, alpha=alpha,
                              accumulate=accumulate),
    )
