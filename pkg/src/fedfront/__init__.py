"""Differentially private federated learning simulator for imbalanced tabular data.

The library covers the whole pipeline: stroke-schema ingestion and
preprocessing, client partitioning, SMOTETomek rebalancing, a small
feed-forward classifier with per-sample gradients, DP-SGD privatization
with Renyi-DP accounting, FedAvg/FedProx rounds, and the privacy-utility
sweep harness with CSV/SVG reporting.
"""

__version__ = "0.1.0"

from .data import (
    ClientPartition,
    DataError,
    FeatureMatrix,
    PreprocessStats,
    RawRecord,
    drop_other_gender,
    fit_preprocessor,
    parse_csv,
    partition_clients,
    stratified_split,
    synth_dataset,
    transform,
)
from .dp import (
    DpConfig,
    PrivacyAccountant,
    PrivacySpend,
    accountant_step,
    clip_gradient,
    default_order_grid,
    epsilon,
    privatize_batch,
    sample_rate,
)
from .federation import (
    ClientConfig,
    FederationConfig,
    FederationState,
    RoundResult,
    aggregate,
    client_update,
    proximal_gradient,
    run_round,
    run_training,
    write_manifest,
)
from .harness import (
    ExperimentData,
    MetricsRow,
    RunConfig,
    SweepGrid,
    emit_metrics_csv,
    parse_metrics_csv,
    prepare_experiment,
    resample_partitions,
    run_stage,
    run_sweep,
)
from .metrics import ConfusionCounts, Metrics, evaluate
from .nn import (
    AdamState,
    ModelArchitecture,
    ModelParams,
    TrainingConfig,
    adam_step,
    bce_loss,
    forward,
    init_model,
    param_count,
    per_sample_gradients,
)
from .reports import emit_epsilon_heatmap, emit_frontier
from .resampling import (
    NeighborIndex,
    ResampleReport,
    build_knn,
    smote,
    smote_tomek,
    tomek_links,
)

__all__ = [
    "__version__",
    "AdamState",
    "ClientConfig",
    "ClientPartition",
    "ConfusionCounts",
    "DataError",
    "DpConfig",
    "ExperimentData",
    "FeatureMatrix",
    "FederationConfig",
    "FederationState",
    "Metrics",
    "MetricsRow",
    "ModelArchitecture",
    "ModelParams",
    "NeighborIndex",
    "PreprocessStats",
    "PrivacyAccountant",
    "PrivacySpend",
    "RawRecord",
    "ResampleReport",
    "RoundResult",
    "RunConfig",
    "SweepGrid",
    "TrainingConfig",
    "accountant_step",
    "adam_step",
    "aggregate",
    "bce_loss",
    "build_knn",
    "client_update",
    "clip_gradient",
    "default_order_grid",
    "drop_other_gender",
    "emit_epsilon_heatmap",
    "emit_frontier",
    "emit_metrics_csv",
    "epsilon",
    "evaluate",
    "fit_preprocessor",
    "forward",
    "init_model",
    "param_count",
    "parse_csv",
    "parse_metrics_csv",
    "partition_clients",
    "per_sample_gradients",
    "prepare_experiment",
    "privatize_batch",
    "proximal_gradient",
    "resample_partitions",
    "run_round",
    "run_stage",
    "run_sweep",
    "run_training",
    "sample_rate",
    "smote",
    "smote_tomek",
    "stratified_split",
    "synth_dataset",
    "tomek_links",
    "transform",
    "write_manifest",
]
