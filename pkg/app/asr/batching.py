"""Padding a list of samples into the arrays the model consumes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app.asr.config import ModelConfig, Variant
from app.core.errors import ConfigError, InputTooShortError
from app.corpus.schemas import CorpusSample
from app.corpus.vocab import Vocabulary


@dataclass
class Batch:
    ids: list[str]
    features: np.ndarray  # [B, S, F]
    lengths: np.ndarray  # [B]
    inputs: np.ndarray  # [B, T] gold token t-1, starting at bos
    targets: np.ndarray  # [B, T] gold token t, ending at eos
    target_mask: np.ndarray  # [B, T] False on padding
    references: list[list[str]]
    visual_global: Optional[np.ndarray] = None  # [B, visual_in]
    proposals: Optional[np.ndarray] = None  # [B, N, visual_in]

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def frame_mask(self) -> np.ndarray:
        return np.arange(self.features.shape[1])[None, :] < self.lengths[:, None]


def collate(samples: Sequence[CorpusSample], vocab: Vocabulary, config: ModelConfig) -> Batch:
    """Pad features with zeros and targets with ``pad``; attach the visual input the variant needs."""
    if not samples:
        raise InputTooShortError("cannot collate an empty batch")
    dtype = config.numpy_dtype
    lengths = np.array([s.utterance.n_frames for s in samples], dtype=np.int64)
    short = [s.id for s, n in zip(samples, lengths) if n < config.min_source_frames]
    if short:
        raise InputTooShortError(f"utterances shorter than {config.min_source_frames} frames: {', '.join(short)}")
    features = np.zeros((len(samples), int(lengths.max()), config.feature_dim), dtype=dtype)
    for row, sample in enumerate(samples):
        features[row, : lengths[row]] = sample.utterance.features

    encoded = [vocab.encode(s.utterance.words, add_bos=True, add_eos=True) for s in samples]
    steps = max(len(e) for e in encoded) - 1
    inputs = np.full((len(samples), steps), vocab.pad_index, dtype=np.int64)
    targets = np.full((len(samples), steps), vocab.pad_index, dtype=np.int64)
    for row, ids in enumerate(encoded):
        inputs[row, : len(ids) - 1] = ids[:-1]
        targets[row, : len(ids) - 1] = ids[1:]
    target_mask = targets != vocab.pad_index

    visual_global = proposals = None
    if config.variant.uses_visual:
        missing = [s.id for s in samples if s.visual is None]
        if missing:
            raise ConfigError(f"{config.variant.value} needs visual contexts; none for {', '.join(missing[:5])}")
        if config.variant is Variant.MAG:
            visual_global = np.stack([s.visual.global_feature for s in samples]).astype(dtype)
        else:
            missing = [s.id for s in samples if not s.visual.has_proposals]
            if missing:
                raise ConfigError(f"MAOP needs object proposals; none for {', '.join(missing[:5])}")
            proposals = np.stack([s.visual.proposal_features for s in samples]).astype(dtype)
    return Batch(
        ids=[s.id for s in samples],
        features=features,
        lengths=lengths,
        inputs=inputs,
        targets=targets,
        target_mask=target_mask,
        references=[list(s.utterance.words) for s in samples],
        visual_global=visual_global,
        proposals=proposals,
    )
