"""Pyramidal bidirectional LSTM encoder."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.asr.config import ModelConfig
from app.core.errors import InputTooShortError, ShapeError
from app.numeric.functional import concat, stack
from app.numeric.nn import LSTMCell, Module, blend
from app.numeric.tensor import Tensor


@dataclass
class EncoderStates:
    states: Tensor  # [B, S', d_enc]
    mask: np.ndarray  # [B, S'] bool
    lengths: np.ndarray  # [B]
    source_lengths: np.ndarray  # [B]

    def row(self, index: int) -> np.ndarray:
        """Unpadded [S', d_enc] states of one utterance."""
        return self.states.data[index, : self.lengths[index]]


class BiLSTMLayer(Module):
    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator, dtype):
        self.forward_cell = LSTMCell(in_dim, hidden, rng, dtype)
        self.backward_cell = LSTMCell(in_dim, hidden, rng, dtype)

    def __call__(self, xs: Tensor, mask: np.ndarray) -> Tensor:
        """xs [B, S, in] -> [B, S, 2h]; padded steps never reach valid outputs."""
        batch, steps, _ = xs.shape
        full = bool(mask.all())
        outputs = []
        for cell in (self.forward_cell, self.backward_cell):
            gates = cell.project_inputs(xs)
            h = Tensor(np.zeros((batch, cell.hidden), dtype=xs.dtype))
            c = Tensor(np.zeros((batch, cell.hidden), dtype=xs.dtype))
            order = range(steps) if cell is self.forward_cell else range(steps - 1, -1, -1)
            per_step: list[Optional[Tensor]] = [None] * steps
            for t in order:
                h_new, c_new = cell.step(gates[:, t], h, c)
                keep = None if full else mask[:, t : t + 1].astype(xs.dtype)
                h, c = blend(h_new, h, keep), blend(c_new, c, keep)
                per_step[t] = h
            outputs.append(stack(per_step, axis=1))
        return concat(outputs, axis=-1)


class Encoder(Module):
    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        dtype = config.numpy_dtype
        per_direction = config.enc_hidden // 2
        self.layers = [
            BiLSTMLayer(config.feature_dim if i == 0 else config.enc_hidden, per_direction, rng, dtype)
            for i in range(config.enc_layers)
        ]
        self._subsample_after = set(config.subsample_layers)
        self._min_frames = config.min_source_frames
        self._feature_dim = config.feature_dim

    def __call__(self, features: np.ndarray, lengths: np.ndarray) -> EncoderStates:
        if features.ndim != 3 or features.shape[-1] != self._feature_dim:
            raise ShapeError(f"encoder expects [B, S, {self._feature_dim}] features, got {features.shape}")
        if lengths.min() < self._min_frames:
            raise InputTooShortError(f"encoder needs at least {self._min_frames} frames, got {int(lengths.min())}")
        source_lengths = lengths.copy()
        xs = Tensor(features)
        for index, layer in enumerate(self.layers, start=1):
            mask = np.arange(xs.shape[1])[None, :] < lengths[:, None]
            xs = layer(xs, mask)
            if index in self._subsample_after:
                xs = xs[:, 0::2]
                lengths = (lengths + 1) // 2
        mask = np.arange(xs.shape[1])[None, :] < lengths[:, None]
        return EncoderStates(xs, mask, lengths, source_lengths)
