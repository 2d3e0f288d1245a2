from .trends import TrendLabel, label_trend
from .features import (
    CHANNEL_NAMES,
    FeatureWindow,
    WindowRejected,
    estimate_heart_rate,
    estimate_tau,
    estimate_contractility,
    derive_features,
    bin_mean,
)
from .samples import HORIZON, Sample, SampleRejected, augment, split_context_target, balanced_subsample
from .synth import PerturbConfig, build_cycle_library, make_tiled_series, synthesize_beatseries
from .dataset import (
    DatasetManifest,
    GeneratorConfig,
    sim_default_config,
    realproxy_default_config,
    make_sim_dataset,
    make_realproxy_dataset,
    write_dataset,
    load_dataset,
    export_debug_csv,
    compute_channel_stats,
    MAP_RANGE,
)

__all__ = [
    "TrendLabel",
    "label_trend",
    "FeatureWindow",
    "WindowRejected",
    "estimate_heart_rate",
    "estimate_tau",
    "estimate_contractility",
    "derive_features",
    "bin_mean",
    "SampleRejected",
    "augment",
    "Sample",
    "DatasetManifest",
    "GeneratorConfig",
    "sim_default_config",
    "realproxy_default_config",
    "make_sim_dataset",
    "make_realproxy_dataset",
    "split_context_target",
    "balanced_subsample",
    "write_dataset",
    "load_dataset",
    "export_debug_csv",
    "compute_channel_stats",
    "MAP_RANGE",
    "CHANNEL_NAMES",
]
