"""Degradation indicators behind one interface.

Every detector is fitted on the reference (training) data and then asked for a
``DriftVerdict`` on an incoming batch::

    det = McUDIDetector(model).fit(X_train)
    verdict = det.detect(X_test)

The KS-family detectors run a two-sample KS test per examined feature and
alarm when any p-value falls below ``alpha`` (no multiplicity correction).
``McUDIDetector`` examines only the features the deployed model finds more
important than average; ``KSDetector`` examines all of them.
"""

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_features, check_is_fitted, check_n_features
from .classifier import important_features
from .exceptions import ConfigError, DimensionMismatchError
from .stats import KsResult, ks_two_sample

__all__ = [
    "DETECTOR_NAMES",
    "DriftVerdict",
    "FeatureChangeReport",
    "StaticDetector",
    "PeriodicDetector",
    "KSDetector",
    "McUDIDetector",
    "make_detector",
    "detect_static",
    "detect_periodic",
    "detect_ks_all",
    "detect_mcudi",
    "count_changed_features",
]

DETECTOR_NAMES = ("static", "periodic", "ks", "mcudi")


@dataclass(frozen=True)
class DriftVerdict:
    detector: str
    alarm: bool
    examined_features: tuple = ()
    per_feature: Mapping[int, KsResult] = field(default_factory=dict)
    alpha: float = 0.05
    degenerate: bool = False

    @property
    def min_p_value(self):
        if not self.per_feature:
            return None
        return min(r.p_value for r in self.per_feature.values())

    def to_record(self, **context):
        return {
            **context,
            "detector": self.detector,
            "alarm": self.alarm,
            "degenerate": self.degenerate,
            "examined_features": list(self.examined_features),
            "p_values": {str(j): r.p_value for j, r in self.per_feature.items()},
            "statistics": {str(j): r.statistic for j, r in self.per_feature.items()},
        }


@dataclass(frozen=True)
class FeatureChangeReport:
    changed_indices: tuple
    n_features: int
    per_feature: Mapping[int, KsResult] = field(default_factory=dict)

    @property
    def changed_count(self):
        return len(self.changed_indices)

    @property
    def changed_fraction(self):
        return self.changed_count / self.n_features


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")


def _per_feature_ks(reference, X, features):
    return {int(j): ks_two_sample(reference[:, j], X[:, j]) for j in features}


class _Detector(BaseEstimator):
    name = ""

    def fit(self, X, y=None):
        X = as_features(X, name="reference data")
        self.reference_ = X
        self.n_features_in_ = X.shape[1]
        return self

    def _incoming(self, X):
        check_is_fitted(self, "reference_")
        X = as_features(X, name="incoming data")
        check_n_features(X, self.n_features_in_, name="incoming data")
        return X

    def detect(self, X):
        raise NotImplementedError


class StaticDetector(_Detector):
    """Never alarms: the model is never updated."""

    name = "static"

    def detect(self, X):
        self._incoming(X)
        return DriftVerdict(self.name, False)


class PeriodicDetector(_Detector):
    """Always alarms: the model is updated every period."""

    name = "periodic"

    def detect(self, X):
        self._incoming(X)
        return DriftVerdict(self.name, True)


class KSDetector(_Detector):
    """Per-feature KS test on every feature."""

    name = "ks"

    def __init__(self, alpha=0.05):
        self.alpha = alpha

    def detect(self, X):
        _check_alpha(self.alpha)
        X = self._incoming(X)
        features = tuple(range(X.shape[1]))
        res = _per_feature_ks(self.reference_, X, features)
        alarm = any(r.p_value < self.alpha for r in res.values())
        return DriftVerdict(self.name, alarm, features, res, self.alpha)


class McUDIDetector(_Detector):
    """Model-centric KS test restricted to the model's important features.

    ``model`` is any fitted estimator with ``feature_importances_``. The
    important set holds features whose importance is strictly above the mean.
    If that set is empty (all importances equal) every feature is examined
    and the verdict is marked ``degenerate``.
    """

    name = "mcudi"

    def __init__(self, model=None, alpha=0.05):
        self.model = model
        self.alpha = alpha

    def fit(self, X, y=None):
        super().fit(X)
        if self.model is None:
            raise ConfigError("McUDIDetector needs a fitted model")
        imp = np.asarray(self.model.feature_importances_)
        if imp.shape[0] != self.n_features_in_:
            raise DimensionMismatchError(
                f"model has {imp.shape[0]} features, reference data {self.n_features_in_}"
            )
        selected = important_features(self.model)
        self.important_ = selected
        if selected.indices:
            self.examined_features_ = selected.indices
            self.degenerate_ = False
        else:
            self.examined_features_ = tuple(range(self.n_features_in_))
            self.degenerate_ = True
        return self

    def detect(self, X):
        _check_alpha(self.alpha)
        X = self._incoming(X)
        res = _per_feature_ks(self.reference_, X, self.examined_features_)
        alarm = any(r.p_value < self.alpha for r in res.values())
        return DriftVerdict(self.name, alarm, self.examined_features_, res, self.alpha,
                            degenerate=self.degenerate_)


def make_detector(name, model=None, alpha=0.05):
    if name == "static":
        return StaticDetector()
    if name == "periodic":
        return PeriodicDetector()
    if name == "ks":
        return KSDetector(alpha=alpha)
    if name == "mcudi":
        return McUDIDetector(model=model, alpha=alpha)
    raise ConfigError(f"unknown detector {name!r}; choose from {DETECTOR_NAMES}")


def _features(batch):
    return getattr(batch, "features", batch)


def detect_static(train, test):
    return StaticDetector().fit(_features(train)).detect(_features(test))


def detect_periodic(train, test):
    return PeriodicDetector().fit(_features(train)).detect(_features(test))


def detect_ks_all(train, test, alpha=0.05):
    return KSDetector(alpha).fit(_features(train)).detect(_features(test))


def detect_mcudi(model, train, test, alpha=0.05):
    return McUDIDetector(model, alpha).fit(_features(train)).detect(_features(test))


def count_changed_features(train, test, alpha=0.05):
    """Features whose train/test distributions differ by a KS test at ``alpha``."""
    _check_alpha(alpha)
    A = as_features(_features(train), name="train")
    B = as_features(_features(test), name="test")
    check_n_features(B, A.shape[1], name="test")
    res = _per_feature_ks(A, B, range(A.shape[1]))
    changed = tuple(j for j, r in res.items() if r.p_value < alpha)
    return FeatureChangeReport(changed, A.shape[1], res)
