"""Tabular batches, CSV ingestion and first-period scaling."""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_binary_labels, as_features, check_is_fitted, check_n_features
from .exceptions import (
    ConfigError,
    DataError,
    EmptyInputError,
    InsufficientDataError,
    SchemaError,
)

logger = logging.getLogger(__name__)

GRANULARITIES = ("day", "week", "month", "rows")


@dataclass(frozen=True)
class DatasetSchema:
    """Which CSV columns hold features, the failure label and the period.

    ``period_granularity`` is one of ``day``, ``week``, ``month`` (calendar
    units of the timestamp in ``period_column``, truncated in UTC; weeks
    start on Monday) or ``rows`` (consecutive chunks of ``rows_per_period``
    rows in file order, ``period_column`` unused).
    """

    feature_columns: tuple
    label_column: str
    period_column: Optional[str] = None
    period_granularity: str = "day"
    rows_per_period: Optional[int] = None

    def __post_init__(self):
        cols = tuple(self.feature_columns)
        object.__setattr__(self, "feature_columns", cols)
        if not cols:
            raise ConfigError("feature_columns must not be empty")
        if len(set(cols)) != len(cols):
            raise ConfigError("feature_columns must be distinct")
        if self.label_column in cols:
            raise ConfigError("label_column must not be one of the feature columns")
        if self.period_granularity not in GRANULARITIES:
            raise ConfigError(
                f"period_granularity must be one of {GRANULARITIES}, "
                f"got {self.period_granularity!r}"
            )
        if self.period_granularity == "rows":
            if not self.rows_per_period or self.rows_per_period < 1:
                raise ConfigError("granularity 'rows' needs rows_per_period >= 1")
        elif not self.period_column:
            raise ConfigError(
                f"granularity {self.period_granularity!r} needs a period_column"
            )

    @classmethod
    def from_dict(cls, d):
        known = {"feature_columns", "label_column", "period_column",
                 "period_granularity", "rows_per_period"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown schema keys: {sorted(unknown)}")
        if "feature_columns" not in d or "label_column" not in d:
            raise ConfigError("schema needs feature_columns and label_column")
        return cls(**{**d, "feature_columns": tuple(d["feature_columns"])})

    def to_dict(self):
        return {
            "feature_columns": list(self.feature_columns),
            "label_column": self.label_column,
            "period_column": self.period_column,
            "period_granularity": self.period_granularity,
            "rows_per_period": self.rows_per_period,
        }


@dataclass(frozen=True, eq=False)
class Batch:
    """One time period of tabular data.

    Arrays are copied and made read-only on construction.
    """

    period_id: int
    features: np.ndarray
    labels: Optional[np.ndarray] = None
    period_label: Optional[str] = None

    def __post_init__(self):
        if self.period_id < 0:
            raise DataError("period_id must be >= 0")
        X = as_features(self.features, name="batch features").copy()
        X.setflags(write=False)
        object.__setattr__(self, "features", X)
        if self.labels is not None:
            y = as_binary_labels(self.labels, n=X.shape[0], name="batch labels").copy()
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def has_both_classes(self):
        if self.labels is None:
            return False
        n_pos = int(self.labels.sum())
        return 0 < n_pos < self.n

    def with_features(self, features):
        return Batch(self.period_id, features, self.labels, self.period_label)


@dataclass
class IngestionReport:
    rows_read: int = 0
    rows_kept: int = 0
    dropped_bad_features: int = 0
    dropped_bad_label: int = 0
    dropped_bad_period: int = 0
    omitted_periods: list = field(default_factory=list)
    period_labels: list = field(default_factory=list)

    @property
    def rows_dropped(self):
        return self.dropped_bad_features + self.dropped_bad_label + self.dropped_bad_period

    def to_dict(self):
        return {
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "rows_dropped": self.rows_dropped,
            "dropped_bad_features": self.dropped_bad_features,
            "dropped_bad_label": self.dropped_bad_label,
            "dropped_bad_period": self.dropped_bad_period,
            "omitted_periods": list(self.omitted_periods),
            "period_labels": list(self.period_labels),
        }


def _calendar_keys(stamps, unit):
    """Integer period key and display label per timestamp (NaT -> -1)."""
    valid = stamps.notna().to_numpy()
    days = np.full(len(stamps), -1, dtype=np.int64)
    days[valid] = (
        stamps[valid].dt.floor("D").dt.tz_localize(None)
        .to_numpy().astype("datetime64[D]").astype(np.int64)
    )
    if unit == "day":
        keys = days
    elif unit == "week":
        # 1970-01-01 was a Thursday; shift so keys land on Mondays
        keys = np.where(valid, days - (days + 3) % 7, -1)
    else:
        dt = days.astype("datetime64[D]")
        months = dt.astype("datetime64[M]").astype(np.int64)
        keys = np.where(valid, months, -1)
    return keys, valid


def _key_label(key, unit):
    if unit == "month":
        return str(np.datetime64(int(key), "M"))
    if unit == "rows":
        return f"rows-{key}"
    return str(np.datetime64(int(key), "D"))


def _key_range(keys, unit):
    lo, hi = int(keys.min()), int(keys.max())
    step = 7 if unit == "week" else 1
    return range(lo, hi + 1, step)


def _to_float(text):
    try:
        return float(text)
    except ValueError:
        return math.nan


def _parse_floats(column):
    """Column of strings to float64 with exact (correctly rounded) parsing.

    Unparseable cells become NaN. pandas' own numeric coercion is not
    round-trip exact, which would perturb values written with full precision.
    """
    values = column.to_numpy(dtype=str)
    try:
        return values.astype(np.float64)
    except ValueError:
        return np.array([_to_float(v) for v in values], dtype=np.float64)


def read_csv_batches(path, schema):
    """Read ``path`` into period batches plus an ``IngestionReport``.

    Rows with missing or non-numeric feature values, a label outside {0, 1}
    or an unparseable timestamp are dropped and counted. Batches are ordered
    by period and numbered 0, 1, 2, ... over the non-empty periods; calendar
    periods without any surviving row are listed in ``omitted_periods``.
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise EmptyInputError(f"{path} is empty") from None
    required = list(schema.feature_columns) + [schema.label_column]
    if schema.period_granularity != "rows":
        required.append(schema.period_column)
    for col in required:
        if col not in df.columns:
            raise SchemaError(f"column {col!r} is missing from {path}")
    if len(df) == 0:
        raise EmptyInputError(f"{path} has a header but no rows")

    report = IngestionReport(rows_read=len(df))
    unit = schema.period_granularity

    X = np.column_stack([_parse_floats(df[c]) for c in schema.feature_columns])
    feat_ok = np.isfinite(X).all(axis=1)

    labels = pd.to_numeric(df[schema.label_column], errors="coerce").to_numpy()
    label_ok = np.isin(labels, (0, 1))

    if unit == "rows":
        keys = np.arange(len(df), dtype=np.int64) // schema.rows_per_period
        period_ok = np.ones(len(df), dtype=bool)
    else:
        stamps = pd.to_datetime(df[schema.period_column], utc=True, errors="coerce",
                                format="mixed")
        keys, period_ok = _calendar_keys(stamps, unit)

    report.dropped_bad_period = int((~period_ok).sum())
    report.dropped_bad_features = int((period_ok & ~feat_ok).sum())
    report.dropped_bad_label = int((period_ok & feat_ok & ~label_ok).sum())
    keep = period_ok & feat_ok & label_ok
    report.rows_kept = int(keep.sum())
    if report.rows_dropped:
        logger.warning("dropped %d of %d rows from %s (features %d, label %d, period %d)",
                       report.rows_dropped, report.rows_read, path,
                       report.dropped_bad_features, report.dropped_bad_label,
                       report.dropped_bad_period)
    if not keep.any():
        raise EmptyInputError(f"no usable rows in {path}")

    kept_keys = keys[keep]
    present = set(np.unique(kept_keys).tolist())
    all_keys = keys[period_ok]
    for key in _key_range(all_keys, unit):
        if key not in present:
            report.omitted_periods.append(_key_label(key, unit))
    if report.omitted_periods:
        logger.warning("omitted %d empty period(s): %s", len(report.omitted_periods),
                       ", ".join(report.omitted_periods))

    batches = []
    X_kept, y_kept = X[keep], labels[keep].astype(np.int64)
    for period_id, key in enumerate(sorted(present)):
        rows = kept_keys == key
        label = _key_label(key, unit)
        report.period_labels.append(label)
        batches.append(Batch(period_id, X_kept[rows], y_kept[rows], label))
    return batches, report


def load_csv(path, schema):
    """Load a CSV into an ordered list of ``Batch`` (see ``read_csv_batches``)."""
    batches, _ = read_csv_batches(path, schema)
    return batches


class Scaler(TransformerMixin, BaseEstimator):
    """Per-feature standardization fitted on one reference period.

    Location is the column mean and scale the population standard deviation.
    Constant columns keep scale 1, so they are only centred.
    """

    def fit(self, X, y=None):
        X = as_features(X)
        if X.shape[0] < 2:
            raise InsufficientDataError("fitting a scaler needs at least 2 rows")
        self.location_ = X.mean(axis=0)
        scale = X.std(axis=0)
        constant = np.ptp(X, axis=0) == 0
        scale[constant] = 1.0
        self.scale_ = scale
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "location_")
        X = as_features(X)
        check_n_features(X, self.n_features_in_)
        return (X - self.location_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "location_")
        return np.asarray(X, dtype=np.float64) * self.scale_ + self.location_


def fit_scaler(first_batch):
    return Scaler().fit(getattr(first_batch, "features", first_batch))


def apply_scaler(scaler, batch):
    """Return a new batch with scaled features; labels and period unchanged."""
    return batch.with_features(scaler.transform(batch.features))


def scale_batches(batches: Sequence[Batch]):
    """Fit on the first batch only and transform every batch with it."""
    if not batches:
        raise EmptyInputError("no batches to scale")
    scaler = fit_scaler(batches[0])
    return [apply_scaler(scaler, b) for b in batches], scaler
