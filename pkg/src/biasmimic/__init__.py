"""Subgroup-aware dataset resampling and bias-mitigation training.

The package revolves around datasets whose samples carry a target
class y and a sensitive group b. It provides four subgroup-level
samplers (undersampling, oversampling, upweighting, and per-class
distribution mimicking), exact verifiers for the independence
properties the mimicking sampler guarantees, a small manual-gradient
classifier with one-vs-rest binary heads and a detached inference
head, training loops for all methods, subgroup-aware metrics, and a
CLI pipeline for reproducible experiments.
"""

from .dataset import (
    CsvSchema,
    GroupedDataset,
    Sample,
    SubgroupTable,
    SyntheticSpec,
    dataset_from_arrays,
    generate_synthetic,
    load_csv,
    save_csv,
    split,
    subgroup_table,
)
from .errors import ConfigError, DataError, TrainingDiverged
from .metrics import (
    MetricsReport,
    bias_amplification,
    bias_conflict,
    evaluate_model,
    evaluate_predictions,
    minority_subgroups,
    unbiased_accuracy,
)
from .model import Classifier, load_checkpoint, save_checkpoint
from .samplers import (
    LabelView,
    ResamplePlan,
    SampleWeights,
    build_label_views,
    mimic_counts,
    oversample,
    partial_mimic,
    select_ids,
    undersample,
    upweight,
)
from .stats import IndependenceReport, check_mimicking, rounding_bound, verify_independence
from .train import (
    RunLog,
    TrainConfig,
    run_dy_ablation,
    run_sensitivity_sweep,
    train_bias_mimicking,
    train_resampled,
    train_vanilla,
    train_with_method,
)

__version__ = "0.1.0"

__all__ = [
    "CsvSchema",
    "GroupedDataset",
    "Sample",
    "SubgroupTable",
    "SyntheticSpec",
    "dataset_from_arrays",
    "generate_synthetic",
    "load_csv",
    "save_csv",
    "split",
    "subgroup_table",
    "ConfigError",
    "DataError",
    "TrainingDiverged",
    "MetricsReport",
    "bias_amplification",
    "bias_conflict",
    "evaluate_model",
    "evaluate_predictions",
    "minority_subgroups",
    "unbiased_accuracy",
    "Classifier",
    "load_checkpoint",
    "save_checkpoint",
    "LabelView",
    "ResamplePlan",
    "SampleWeights",
    "build_label_views",
    "mimic_counts",
    "oversample",
    "partial_mimic",
    "select_ids",
    "undersample",
    "upweight",
    "IndependenceReport",
    "check_mimicking",
    "rounding_bound",
    "verify_independence",
    "RunLog",
    "TrainConfig",
    "run_dy_ablation",
    "run_sensitivity_sweep",
    "train_bias_mimicking",
    "train_resampled",
    "train_vanilla",
    "train_with_method",
    "__version__",
]
