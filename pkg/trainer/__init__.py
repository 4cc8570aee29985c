from trainer.config import (
    TrainConfig,
    UpdateStrategy,
    OutlierStrategy,
    load_run_config,
    dump_run_config
)
from trainer.sampler import pk_sample
from trainer.reports import EpochReport, TrainingReport, write_run_artifacts
from trainer.trainer import Trainer, prepare_datasets, run_training

__all__ = [
    "TrainConfig",
    "UpdateStrategy",
    "OutlierStrategy",
    "load_run_config",
    "dump_run_config",
    "pk_sample",
    "EpochReport",
    "TrainingReport",
    "write_run_artifacts",
    "Trainer",
    "prepare_datasets",
    "run_training"
]
