from __future__ import annotations

from pydantic import BaseModel, Field


class TrainConfig(BaseModel):
    learning_rate: float = Field(0.0004, gt=0)
    lr_decay_factor: float = Field(0.5, gt=0, le=1, description="Applied after every dev evaluation without improvement")
    batch_size: int = Field(36, ge=1)
    grad_clip: float = Field(1.0, gt=0, description="Global gradient norm threshold")
    max_epochs: int = Field(50, ge=1)
    patience: int = Field(5, ge=1, description="Dev evaluations without improvement before stopping")
    seed: int = Field(0, ge=0)
    eval_batch_size: int = Field(32, ge=1)
    save_every_epoch: bool = Field(False, description="Keep a named checkpoint after every epoch")
