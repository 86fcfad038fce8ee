"""McUDI: model-centric unsupervised degradation indication.

Flags drift in a deployed failure-prediction model by running two-sample KS
tests only on the features the model relies on (mean-decrease-in-impurity
importance above average), plus the tooling to label ground truth, score
detectors and simulate retraining strategies.
"""

__version__ = "0.1.0"

from .classifier import (
    ForestHyperparams,
    RandomForest,
    cross_val_error,
    important_features,
    train_forest,
)
from .config import RunConfig, load_config
from .data import (
    Batch,
    DatasetSchema,
    Scaler,
    apply_scaler,
    fit_scaler,
    load_csv,
    read_csv_batches,
    scale_batches,
)
from .detectors import (
    DriftVerdict,
    KSDetector,
    McUDIDetector,
    PeriodicDetector,
    StaticDetector,
    count_changed_features,
    detect_ks_all,
    detect_mcudi,
    detect_periodic,
    detect_static,
)
from .evaluation import (
    DetectionAccuracy,
    evaluate_detector,
    run_label_cost_pipeline,
    run_strategy,
    score_detector,
)
from .exceptions import (
    ConfigError,
    DataError,
    McudiError,
    SchemaError,
)
from .ground_truth import GroundTruthLabel, label_all_batches
from .metrics import error_rate, roc_auc
from .stats import ks_two_sample, z_test_two_proportion
from .synthetic import SyntheticConfig, generate_synthetic_stream
