"""Training loop: bucketed teacher-forced epochs, dev WER model selection, plateau decay, early stopping."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel

from app.asr.batching import collate
from app.asr.checkpoint import save_checkpoint
from app.asr.config import Variant
from app.asr.model import AsrModel
from app.core.errors import ConfigError, DivergenceError
from app.corpus.manifest import write_jsonl
from app.corpus.schemas import Corpus
from app.evaluation.alignment import corpus_wer
from app.evaluation.decode import decode_dataset
from app.numeric.functional import backward
from app.numeric.optim import Adam, OptimizerState, clip_grad_norm, global_grad_norm
from app.training.bucketing import epoch_batches
from app.training.config import TrainConfig

logger = logging.getLogger(__name__)

TRAIN_LOG_FILE = "train_log.jsonl"
BEST_DIR = "best"
EPOCHS_DIR = "epochs"


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    dev_wer: Optional[float]
    learning_rate: float
    wall_clock_seconds: float
    max_grad_norm: float
    improved: bool


@dataclass
class TrainState:
    epoch: int = 0
    best_dev_metric: float = math.inf
    best_epoch: Optional[int] = None
    evaluations_since_improvement: int = 0
    optimizer: Optional[OptimizerState] = None
    seed: int = 0
    history: list[EpochRecord] = field(default_factory=list)

    @property
    def learning_rate(self) -> Optional[float]:
        return None if self.optimizer is None else self.optimizer.learning_rate


def check_corpus_for_variant(corpus: Corpus, variant: Variant) -> None:
    if variant is Variant.MAG and not corpus.has_visual:
        raise ConfigError(f"MAG needs an image for every utterance; {corpus.name or 'corpus'} lacks visual features")
    if variant is Variant.MAOP and not corpus.has_proposals:
        raise ConfigError(f"MAOP needs object proposals for every image; {corpus.name or 'corpus'} lacks them")


def evaluate_dev(model: AsrModel, dev_corpus: Corpus, batch_size: int = 32) -> Optional[float]:
    """Corpus WER in percent from decoding every dev sample."""
    decoded = decode_dataset(model, dev_corpus, batch_size=batch_size)
    return corpus_wer(d.pair for d in decoded).percent


def train_epoch(model: AsrModel, corpus: Corpus, optimizer: Adam, config: TrainConfig, epoch: int) -> tuple[float, float]:
    """One pass over ``corpus``; returns (mean batch loss, largest post-clip gradient norm)."""
    samples = list(corpus)
    params = optimizer.params
    losses, max_norm = [], 0.0
    batches = epoch_batches([s.utterance.n_frames for s in samples], config.batch_size, config.seed, epoch)
    for batch_index, rows in enumerate(batches):
        batch = collate([samples[i] for i in rows], model.vocab, model.config)
        optimizer.zero_grad()
        loss, _ = model.forward_loss(batch)
        value = loss.item()
        if not np.isfinite(value):
            raise DivergenceError(
                f"loss became {value} at epoch {epoch}, batch {batch_index} (utterances {', '.join(batch.ids[:5])})"
            )
        backward(loss)
        clip_grad_norm(params, config.grad_clip)
        max_norm = max(max_norm, global_grad_norm(params))
        optimizer.step()
        losses.append(value)
    return float(np.mean(losses)) if losses else 0.0, max_norm


def train(
    model: AsrModel,
    train_corpus: Corpus,
    dev_corpus: Corpus,
    config: TrainConfig,
    out_dir: Optional[Path] = None,
) -> TrainState:
    """Train until ``patience`` evaluations pass without a better dev WER or ``max_epochs`` is reached.

    The best-dev parameters are restored into ``model`` before returning and,
    with ``out_dir``, saved under ``best/`` next to ``train_log.jsonl``.
    """
    check_corpus_for_variant(train_corpus, model.variant)
    check_corpus_for_variant(dev_corpus, model.variant)
    optimizer = Adam(model.parameters(), config.learning_rate)
    state = TrainState(optimizer=optimizer.state, seed=config.seed)
    best_params: Optional[dict[str, np.ndarray]] = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        train_loss, max_norm = train_epoch(model, train_corpus, optimizer, config, epoch)
        dev_wer = evaluate_dev(model, dev_corpus, config.eval_batch_size)
        metric = math.inf if dev_wer is None else dev_wer
        improved = metric < state.best_dev_metric
        if improved:
            state.best_dev_metric, state.best_epoch = metric, epoch
            state.evaluations_since_improvement = 0
            best_params = {name: p.data.copy() for name, p in model.named_parameters()}
            if out_dir is not None:
                save_checkpoint(model, out_dir / BEST_DIR)
        else:
            state.evaluations_since_improvement += 1
            optimizer.learning_rate = optimizer.learning_rate * config.lr_decay_factor
        state.epoch = epoch
        record = EpochRecord(
            epoch=epoch,
            train_loss=train_loss,
            dev_wer=dev_wer,
            learning_rate=optimizer.learning_rate,
            wall_clock_seconds=round(time.perf_counter() - started, 3),
            max_grad_norm=max_norm,
            improved=improved,
        )
        state.history.append(record)
        if out_dir is not None:
            write_jsonl(out_dir / TRAIN_LOG_FILE, state.history)
            if config.save_every_epoch:
                save_checkpoint(model, out_dir / EPOCHS_DIR / f"epoch-{epoch:03d}")
        logger.info(
            f"epoch {epoch}: train loss {train_loss:.4f}, dev WER {dev_wer if dev_wer is None else round(dev_wer, 2)}, "
            f"lr {optimizer.learning_rate:g}{' (best)' if improved else ''}"
        )
        if state.evaluations_since_improvement >= config.patience:
            logger.info(f"Stopping after {epoch} epochs: no dev improvement in {config.patience} evaluations")
            break

    if best_params is not None:
        for name, param in model.named_parameters():
            param.data = best_params[name]
    return state
