"""Seeded synthetic failure-prediction streams with injected drift.

Each period draws latent values ``Z ~ N(0, I)`` and observes
``X = Z + offset(period)``, where offsets accumulate over the injected shifts
(a shift persists once applied). The failure label is computed from the
*latent* values of the label features::

    y = 1  if  sum_j w_j * Z_j > threshold  else 0      (then flipped with
                                                        prob. label_noise)

so a shift on a label feature moves the decision boundary in observed space
(the old model now errs: real concept drift), while a shift on any other
feature changes the inputs but not the label relation (virtual drift).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from .data import Batch, DatasetSchema
from .exceptions import ConfigError

__all__ = [
    "DriftInjection",
    "SyntheticConfig",
    "SyntheticStream",
    "generate_synthetic_stream",
    "churn_fixture_config",
]

BASE_DATE = np.datetime64("2015-01-01", "D")


@dataclass(frozen=True)
class DriftInjection:
    period: int
    features: tuple
    magnitude: float

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(int(d["period"]), tuple(int(f) for f in d["features"]),
                       float(d["magnitude"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad drift injection {d!r}: {exc}") from None

    def to_dict(self):
        return {"period": self.period, "features": list(self.features),
                "magnitude": self.magnitude}


@dataclass(frozen=True)
class SyntheticConfig:
    """Drift-injection spec.

    ``churn_features``/``churn_magnitude`` are a shorthand: from period
    ``churn_start`` on, every churn feature is shifted by ``+-churn_magnitude``
    (random sign, drawn from the stream seed) at every period. The expanded
    shifts appear in the stream's injection ledger.
    """

    n_features: int
    n_periods: int
    rows_per_period: int
    label_features: tuple
    label_weights: Optional[tuple] = None
    label_threshold: float = 0.0
    label_noise: float = 0.05
    injections: tuple = ()
    churn_features: tuple = ()
    churn_magnitude: float = 0.0
    churn_start: int = 1

    def __post_init__(self):
        for name in ("label_features", "injections", "churn_features"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.label_weights is not None:
            object.__setattr__(self, "label_weights", tuple(self.label_weights))
        d = self.n_features
        if d < 1:
            raise ConfigError("n_features must be >= 1")
        if self.n_periods < 1:
            raise ConfigError("n_periods must be >= 1")
        if self.rows_per_period < 1:
            raise ConfigError("rows_per_period must be >= 1")
        if not self.label_features:
            raise ConfigError("label_features must not be empty")
        if self.label_weights is not None and len(self.label_weights) != len(self.label_features):
            raise ConfigError("label_weights must match label_features in length")
        if not 0.0 <= self.label_noise < 0.5:
            raise ConfigError("label_noise must lie in [0, 0.5)")
        for j in self.label_features + self.churn_features:
            if not 0 <= j < d:
                raise ConfigError(f"feature index {j} out of range for n_features={d}")
        for inj in self.injections:
            if not 0 <= inj.period < self.n_periods:
                raise ConfigError(f"injection period {inj.period} out of range")
            for j in inj.features:
                if not 0 <= j < d:
                    raise ConfigError(f"drift feature index {j} out of range for n_features={d}")

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("synthetic config must be a mapping")
        d = dict(d)
        d["injections"] = tuple(DriftInjection.from_dict(i) for i in d.get("injections", ()))
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad synthetic config: {exc}") from None

    def to_dict(self):
        return {
            "n_features": self.n_features,
            "n_periods": self.n_periods,
            "rows_per_period": self.rows_per_period,
            "label_features": list(self.label_features),
            "label_weights": None if self.label_weights is None else list(self.label_weights),
            "label_threshold": self.label_threshold,
            "label_noise": self.label_noise,
            "injections": [i.to_dict() for i in self.injections],
            "churn_features": list(self.churn_features),
            "churn_magnitude": self.churn_magnitude,
            "churn_start": self.churn_start,
        }


@dataclass(frozen=True)
class SyntheticStream:
    batches: list
    injections: tuple
    rows_per_period: tuple
    concept_drift_periods: tuple
    config: SyntheticConfig = field(repr=False)
    seed: int = 0

    def ledger(self):
        return {
            "seed": self.seed,
            "config": self.config.to_dict(),
            "rows_per_period": list(self.rows_per_period),
            "concept_drift_periods": list(self.concept_drift_periods),
            "injections": [
                {**inj.to_dict(),
                 "kind": "concept" if set(inj.features) & set(self.config.label_features)
                 else "virtual"}
                for inj in self.injections
            ],
        }

    def schema(self):
        names = feature_names(self.config.n_features)
        return DatasetSchema(tuple(names), "failure", "timestamp", "day")

    def to_frame(self):
        names = feature_names(self.config.n_features)
        frames = []
        for b in self.batches:
            df = pd.DataFrame(b.features, columns=names)
            df["failure"] = b.labels
            df["timestamp"] = str(BASE_DATE + b.period_id)
            frames.append(df)
        return pd.concat(frames, ignore_index=True)


def feature_names(d):
    return [f"f{j}" for j in range(d)]


def generate_synthetic_stream(config, seed=0):
    """Draw ``config.n_periods`` batches; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    d = config.n_features
    injections = list(config.injections)
    if config.churn_features and config.churn_magnitude:
        for p in range(config.churn_start, config.n_periods):
            signs = rng.choice((-1.0, 1.0), size=len(config.churn_features))
            for j, s in zip(config.churn_features, signs):
                injections.append(DriftInjection(p, (j,), float(s * config.churn_magnitude)))
    injections.sort(key=lambda inj: (inj.period, inj.features))

    weights = np.ones(len(config.label_features)) if config.label_weights is None \
        else np.asarray(config.label_weights, dtype=np.float64)
    label_idx = np.asarray(config.label_features)
    offset = np.zeros(d)
    batches = []
    concept = set()
    label_set = set(config.label_features)
    for p in range(config.n_periods):
        for inj in injections:
            if inj.period == p:
                offset[list(inj.features)] += inj.magnitude
                if label_set & set(inj.features):
                    concept.add(p)
        Z = rng.standard_normal((config.rows_per_period, d))
        score = Z[:, label_idx] @ weights
        y = (score > config.label_threshold).astype(np.int64)
        flip = rng.random(config.rows_per_period) < config.label_noise
        y[flip] = 1 - y[flip]
        batches.append(Batch(p, Z + offset, y, str(BASE_DATE + p)))
    return SyntheticStream(
        batches=batches,
        injections=tuple(injections),
        rows_per_period=tuple(b.n for b in batches),
        concept_drift_periods=tuple(sorted(concept)),
        config=config,
        seed=seed,
    )


def churn_fixture_config(n_periods=10, rows_per_period=1000, drift_periods=(3, 6, 8),
                         n_features=10, label_features=(0, 1), magnitude=3.0,
                         churn_magnitude=1.0, label_noise=0.05):
    """Stream where every period churns the features the label ignores and a
    few periods shift a label feature (true drift).

    Detectors that watch all features alarm at every period; only those that
    watch the label-relevant features can tell the true drifts apart.
    """
    others = tuple(j for j in range(n_features) if j not in label_features)
    injections = tuple(
        DriftInjection(p, (label_features[i % len(label_features)],), magnitude)
        for i, p in enumerate(drift_periods)
    )
    return SyntheticConfig(
        n_features=n_features,
        n_periods=n_periods,
        rows_per_period=rows_per_period,
        label_features=tuple(label_features),
        label_noise=label_noise,
        injections=injections,
        churn_features=others,
        churn_magnitude=churn_magnitude,
    )
