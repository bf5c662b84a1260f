"""Checkpoint directories: params.bin, config.json and vocab.json.

params.bin is a sequence of named tensors, each written as a uint32 name
length, the UTF-8 name, a uint32 rank, rank uint32 dims and the values as
little-endian float32, all fields little-endian.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from app.asr.config import ModelConfig
from app.asr.model import AsrModel
from app.core.errors import IncompatibleCheckpointError, MalformedRecordError, ManifestNotFoundError
from app.corpus.vocab import Vocabulary

logger = logging.getLogger(__name__)

PARAMS_FILE = "params.bin"
CONFIG_FILE = "config.json"
VOCAB_FILE = "vocab.json"

_U32 = np.dtype("<u4")
_F32 = np.dtype("<f4")


def write_params(path: Path, params: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        for name, value in params.items():
            encoded = name.encode("utf-8")
            value = np.asarray(value)
            f.write(np.array([len(encoded)], dtype=_U32).tobytes())
            f.write(encoded)
            f.write(np.array([value.ndim, *value.shape], dtype=_U32).tobytes())
            f.write(value.astype(_F32).tobytes())


def read_params(path: Path) -> dict[str, np.ndarray]:
    if not path.is_file():
        raise ManifestNotFoundError(f"checkpoint parameters not found: {path}")
    raw = path.read_bytes()
    params: dict[str, np.ndarray] = {}
    offset = 0

    def take(count: int, dtype: np.dtype) -> np.ndarray:
        nonlocal offset
        size = count * dtype.itemsize
        if offset + size > len(raw):
            raise MalformedRecordError(f"{path}: truncated at byte {offset}")
        out = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
        offset += size
        return out

    while offset < len(raw):
        name_len = int(take(1, _U32)[0])
        if offset + name_len > len(raw):
            raise MalformedRecordError(f"{path}: truncated tensor name at byte {offset}")
        name = raw[offset : offset + name_len].decode("utf-8")
        offset += name_len
        rank = int(take(1, _U32)[0])
        dims = tuple(int(d) for d in take(rank, _U32))
        params[name] = take(int(np.prod(dims, dtype=np.int64)), _F32).reshape(dims).copy()
    return params


def save_checkpoint(model: AsrModel, directory: Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_params(directory / PARAMS_FILE, {name: p.data for name, p in model.named_parameters()})
    (directory / CONFIG_FILE).write_text(model.config.model_dump_json(indent=2) + "\n", encoding="utf-8")
    model.vocab.save(directory / VOCAB_FILE)
    logger.debug(f"Saved {model.config.variant.value} checkpoint to {directory}")
    return directory


def read_checkpoint_config(directory: Path) -> ModelConfig:
    path = Path(directory) / CONFIG_FILE
    if not path.is_file():
        raise ManifestNotFoundError(f"checkpoint config not found: {path}")
    try:
        return ModelConfig.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (ValidationError, json.JSONDecodeError) as e:
        raise MalformedRecordError(f"{path}: {e}")


def check_compatible(stored: ModelConfig, wanted: ModelConfig, allow_vocab_change: bool = False) -> None:
    if stored.variant != wanted.variant:
        raise IncompatibleCheckpointError(
            f"checkpoint holds a {stored.variant.value} model, cannot load it as {wanted.variant.value}"
        )
    if stored.compatibility_key() != wanted.compatibility_key():
        raise IncompatibleCheckpointError("checkpoint dimensions do not match the requested model configuration")
    if not allow_vocab_change and stored.vocab_size != wanted.vocab_size:
        raise IncompatibleCheckpointError(
            f"checkpoint vocabulary has {stored.vocab_size} tokens, model has {wanted.vocab_size}"
        )


def assign_params(model: AsrModel, params: dict[str, np.ndarray]) -> None:
    named = dict(model.named_parameters())
    if set(named) != set(params):
        missing = sorted(set(named) - set(params))
        extra = sorted(set(params) - set(named))
        raise IncompatibleCheckpointError(f"checkpoint tensors differ from the model (missing {missing[:3]}, extra {extra[:3]})")
    for name, param in named.items():
        if params[name].shape != param.shape:
            raise IncompatibleCheckpointError(f"{name}: checkpoint shape {params[name].shape} != model shape {param.shape}")
        param.data = params[name].astype(param.data.dtype)


def load_checkpoint(directory: Path, expected: Optional[ModelConfig] = None) -> AsrModel:
    """Rebuild the stored model; ``expected`` guards against loading the wrong variant or dims."""
    directory = Path(directory)
    config = read_checkpoint_config(directory)
    if expected is not None:
        check_compatible(config, expected)
        config = config.model_copy(update={"beam_width": expected.beam_width, "max_decode_len": expected.max_decode_len, "dtype": expected.dtype})
    vocab_path = directory / VOCAB_FILE
    if not vocab_path.is_file():
        raise ManifestNotFoundError(f"checkpoint vocabulary not found: {vocab_path}")
    model = AsrModel(config, Vocabulary.load(vocab_path))
    assign_params(model, read_params(directory / PARAMS_FILE))
    logger.info(f"Loaded {config.variant.value} checkpoint from {directory} ({model.parameter_count()} parameters)")
    return model
