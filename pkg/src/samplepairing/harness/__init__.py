from samplepairing.harness.config import (
    DatasetConfig,
    ExperimentConfig,
    Seeds,
    load_config,
    save_config,
)
from samplepairing.harness.runner import (
    CSV_HEADER,
    EpochRecord,
    ExperimentError,
    MetricsLog,
    RunResult,
    config_from_manifest,
    emit_metrics,
    epoch_batches,
    evaluate,
    prepare_data,
    read_metrics,
    run_experiment,
)

__all__ = [
    "CSV_HEADER",
    "DatasetConfig",
    "EpochRecord",
    "ExperimentConfig",
    "ExperimentError",
    "MetricsLog",
    "RunResult",
    "Seeds",
    "config_from_manifest",
    "emit_metrics",
    "epoch_batches",
    "evaluate",
    "load_config",
    "prepare_data",
    "read_metrics",
    "run_experiment",
    "save_config",
]
