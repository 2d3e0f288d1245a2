from .metrics import (
    mae,
    bucketed_metrics,
    MetricsTable,
    histogram_report,
    HistogramReport,
)
from .baselines import (
    BaselineSpec,
    BASELINE_REGISTRY,
    NOT_IMPLEMENTED,
    run_baseline,
    run_benchmark,
    logistic_probe,
    raw_window_features,
    frozen_model_features,
)

__all__ = [
    "mae",
    "bucketed_metrics",
    "MetricsTable",
    "histogram_report",
    "HistogramReport",
    "BaselineSpec",
    "BASELINE_REGISTRY",
    "NOT_IMPLEMENTED",
    "run_baseline",
    "run_benchmark",
    "logistic_probe",
    "raw_window_features",
    "frozen_model_features",
]
