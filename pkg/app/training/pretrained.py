"""Initializing a model from a checkpoint trained on another corpus (pretrain, then finetune)."""
from __future__ import annotations

import logging
from pathlib import Path

from pydantic import BaseModel, Field

from app.asr.checkpoint import PARAMS_FILE, VOCAB_FILE, check_compatible, read_checkpoint_config, read_params
from app.asr.model import AsrModel
from app.core.errors import IncompatibleCheckpointError, ManifestNotFoundError
from app.corpus.vocab import Vocabulary

logger = logging.getLogger(__name__)

# parameters with one row (or column) per vocabulary entry
_VOCAB_ROWS = {"decoder.embedding.weight": 0, "decoder.output.weight": 1}


class PretrainReport(BaseModel):
    copied: list[str] = Field(default_factory=list, description="Parameters copied in full")
    remapped: list[str] = Field(default_factory=list, description="Vocabulary-indexed parameters copied word by word")
    new_words: list[str] = Field(default_factory=list, description="Words keeping their fresh initialization")

    @property
    def new_embedding_rows(self) -> int:
        return len(self.new_words)


def load_pretrained(checkpoint: Path, model: AsrModel) -> PretrainReport:
    """Copy every parameter of ``checkpoint`` into ``model``; vocabulary rows are matched by word."""
    checkpoint = Path(checkpoint)
    stored = read_checkpoint_config(checkpoint)
    check_compatible(stored, model.config, allow_vocab_change=True)
    vocab_path = checkpoint / VOCAB_FILE
    if not vocab_path.is_file():
        raise ManifestNotFoundError(f"checkpoint vocabulary not found: {vocab_path}")
    stored_vocab = Vocabulary.load(vocab_path)
    params = read_params(checkpoint / PARAMS_FILE)

    report = PretrainReport()
    same_vocab = stored_vocab == model.vocab
    shared = [(model.vocab.index(w), stored_vocab.index(w)) for w in model.vocab.tokens if w in stored_vocab]
    report.new_words = [w for w in model.vocab.tokens if w not in stored_vocab]
    for name, param in model.named_parameters():
        if name not in params:
            raise IncompatibleCheckpointError(f"checkpoint has no tensor {name}")
        value = params[name]
        if name in _VOCAB_ROWS and not same_vocab:
            axis = _VOCAB_ROWS[name]
            data = param.data.copy()
            for new_index, old_index in shared:
                if axis == 0:
                    data[new_index] = value[old_index]
                else:
                    data[:, new_index] = value[:, old_index]
            param.data = data
            report.remapped.append(name)
            continue
        if value.shape != param.shape:
            raise IncompatibleCheckpointError(f"{name}: checkpoint shape {value.shape} != model shape {param.shape}")
        param.data = value.astype(param.data.dtype)
        report.copied.append(name)
    logger.info(
        f"Initialized from {checkpoint}: {len(report.copied)} parameters copied, "
        f"{len(report.remapped)} remapped by word, {report.new_embedding_rows} new embedding rows"
    )
    return report
