from app.training.bucketing import bucket_batches, epoch_batches
from app.training.config import TrainConfig
from app.training.pretrained import PretrainReport, load_pretrained
from app.training.trainer import EpochRecord, TrainState, evaluate_dev, train

__all__ = [
    "EpochRecord",
    "PretrainReport",
    "TrainConfig",
    "TrainState",
    "bucket_batches",
    "epoch_batches",
    "evaluate_dev",
    "load_pretrained",
    "train",
]
