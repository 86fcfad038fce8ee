"""Run configuration loaded from a JSON file.

Keys and defaults::

    {
      "schema": {                         # required for CSV commands
        "feature_columns": ["f0", "f1"],
        "label_column": "failure",
        "period_column": "timestamp",     # null when granularity is "rows"
        "period_granularity": "day",      # day | week | month | rows
        "rows_per_period": null           # required when granularity is "rows"
      },
      "hyperparams": {
        "n_trees": 100, "max_depth": null, "min_samples_split": 2,
        "max_features": "sqrt", "bootstrap": true
      },
      "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
      "alpha": 0.05,
      "folds": 10,
      "window": 1,
      "accumulate": false,
      "output_dir": "reports"
    }

Every key except ``schema`` may be omitted. Unknown keys are rejected so typos
do not silently fall back to defaults.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .classifier import ForestHyperparams
from .data import DatasetSchema
from .exceptions import ConfigError
from .ground_truth import DEFAULT_SEEDS

__all__ = ["RunConfig", "load_config"]

_KEYS = {"schema", "hyperparams", "seeds", "alpha", "folds", "window", "accumulate",
         "output_dir"}


@dataclass(frozen=True)
class RunConfig:
    schema: Optional[DatasetSchema] = None
    hyperparams: ForestHyperparams = field(default_factory=ForestHyperparams)
    seeds: tuple = DEFAULT_SEEDS
    alpha: float = 0.05
    folds: int = 10
    window: int = 1
    accumulate: bool = False
    output_dir: str = "reports"

    def __post_init__(self):
        seeds = tuple(self.seeds)
        object.__setattr__(self, "seeds", seeds)
        if not seeds:
            raise ConfigError("seeds must not be empty")
        if any(isinstance(s, bool) or not isinstance(s, int) or s < 0 for s in seeds):
            raise ConfigError("seeds must be non-negative integers")
        if len(set(seeds)) != len(seeds):
            raise ConfigError("seeds must be distinct")
        if isinstance(self.alpha, bool) or not 0.0 < float(self.alpha) < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if isinstance(self.folds, bool) or not isinstance(self.folds, int) or self.folds < 2:
            raise ConfigError("folds must be an integer >= 2")
        if isinstance(self.window, bool) or not isinstance(self.window, int) or self.window < 1:
            raise ConfigError("window must be an integer >= 1")
        if not isinstance(self.accumulate, bool):
            raise ConfigError("accumulate must be true or false")

    def require_schema(self):
        if self.schema is None:
            raise ConfigError("this command needs a 'schema' section in the config")
        return self.schema

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - _KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        if kw.get("schema") is not None:
            kw["schema"] = DatasetSchema.from_dict(kw["schema"])
        if "hyperparams" in kw:
            kw["hyperparams"] = ForestHyperparams.from_dict(kw["hyperparams"] or {})
        if "seeds" in kw:
            kw["seeds"] = tuple(kw["seeds"])
        if "output_dir" in kw:
            kw["output_dir"] = str(kw["output_dir"])
        return cls(**kw)

    def to_dict(self):
        return {
            "schema": None if self.schema is None else self.schema.to_dict(),
            "hyperparams": self.hyperparams.to_dict(),
            "seeds": list(self.seeds),
            "alpha": self.alpha,
            "folds": self.folds,
            "window": self.window,
            "accumulate": self.accumulate,
            "output_dir": self.output_dir,
        }

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def load_config(path=None):
    """Read a JSON config file; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return RunConfig.from_dict(data)
