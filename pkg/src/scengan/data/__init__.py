from .series import (
    CsvSchema,
    NormalizedSeries,
    RawSeries,
    load_csv,
    normalize,
    read_scenario_csv,
    write_csv,
    write_scenario_csv,
)
from .dataset import (
    DatasetMeta,
    ScenarioDataset,
    flatten_samples,
    shape_samples,
    split,
)
from .labels import (
    LabelScheme,
    MEAN_BOUNDARIES_MW,
    RAMP_BOUNDARIES_MW,
    apply_scheme,
    forecast_total_boundaries,
    label_by_forecast_error,
    label_by_mean,
    label_by_month,
    label_by_ramp,
    ramp_statistic,
)
from .perturb import NoiseReport, inject_bad_data, inject_noise
from .synth import (
    DEFAULT_CAPACITY_MW,
    SYNTH_KINDS,
    ar1_latent,
    exponential_corr,
    synth_dataset,
)

__all__ = [
    "CsvSchema", "NormalizedSeries", "RawSeries", "load_csv", "normalize",
    "read_scenario_csv", "write_csv", "write_scenario_csv",
    "DatasetMeta", "ScenarioDataset", "flatten_samples", "shape_samples", "split",
    "LabelScheme", "MEAN_BOUNDARIES_MW", "RAMP_BOUNDARIES_MW", "apply_scheme",
    "forecast_total_boundaries", "label_by_forecast_error", "label_by_mean",
    "label_by_month", "label_by_ramp", "ramp_statistic",
    "NoiseReport", "inject_bad_data", "inject_noise",
    "DEFAULT_CAPACITY_MW", "SYNTH_KINDS", "ar1_latent", "exponential_corr",
    "synth_dataset",
]
