"""Conditional GRU decoder with encoder, proposal and hierarchical modality attention."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.asr.config import ModelConfig, Variant
from app.asr.encoder import EncoderStates
from app.core.errors import ConfigError
from app.numeric.functional import stack
from app.numeric.nn import AdditiveAttention, Embedding, GRUCell, Linear, Module
from app.numeric.tensor import Tensor


@dataclass
class DecoderState:
    h1: Tensor  # [B, dec_hidden]
    h2: Tensor  # [B, dec_hidden]

    def select(self, rows: np.ndarray) -> "DecoderState":
        return DecoderState(self.h1[rows], self.h2[rows])


@dataclass
class VisualMemory:
    """Projected visual keys: one global vector (MAG) or N proposals (MAOP) per row."""

    keys: Tensor  # [B, n, d]
    projected_keys: Tensor  # [B, n, attn]

    def select(self, rows: np.ndarray) -> "VisualMemory":
        return VisualMemory(self.keys[rows], self.projected_keys[rows])


@dataclass
class StepWeights:
    encoder: np.ndarray  # [B, S']
    proposals: Optional[np.ndarray] = None  # [B, N]
    alphas: Optional[np.ndarray] = None  # [B, 2] as (alpha_a, alpha_v)


@dataclass
class EncoderMemory:
    states: EncoderStates
    projected_keys: Tensor

    def select(self, rows: np.ndarray) -> "EncoderMemory":
        s = self.states
        picked = EncoderStates(s.states[rows], s.mask[rows], s.lengths[rows], s.source_lengths[rows])
        return EncoderMemory(picked, self.projected_keys[rows])


class Decoder(Module):
    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        dtype = config.numpy_dtype
        self.variant = config.variant
        self.embedding = Embedding(config.vocab_size, config.emb_dim, rng, dtype)
        self.gru1 = GRUCell(config.emb_dim, config.dec_hidden, rng, dtype)
        self.encoder_attention = AdditiveAttention(config.enc_hidden, config.dec_hidden, config.attn_dim, rng, dtype)
        if config.variant.uses_visual:
            self.visual_proj = Linear(config.visual_in_dim, config.visual_proj_dim, rng, dtype)
            # MAG attends over one key, so these weights get no gradient; kept so MAG and MAOP have equal size
            self.visual_attention = AdditiveAttention(
                config.visual_proj_dim, config.dec_hidden, config.attn_dim, rng, dtype
            )
            self.modality_attention = AdditiveAttention(config.enc_hidden, config.dec_hidden, config.attn_dim, rng, dtype)
        self.gru2 = GRUCell(config.enc_hidden, config.dec_hidden, rng, dtype)
        self.output = None if config.tie_embeddings else Linear(config.dec_hidden, config.vocab_size, rng, dtype, bias=False)
        self.dec_hidden = config.dec_hidden
        self.dtype = dtype

    def initial_state(self, batch: int) -> DecoderState:
        zeros = np.zeros((batch, self.dec_hidden), dtype=self.dtype)
        return DecoderState(Tensor(zeros), Tensor(zeros.copy()))

    def remember(self, encoded: EncoderStates) -> EncoderMemory:
        return EncoderMemory(encoded, self.encoder_attention.project_keys(encoded.states))

    def project_visual(self, raw: np.ndarray) -> Tensor:
        """Shared affine map from CNN features to the attention space; works on [..., visual_in]."""
        if not self.variant.uses_visual:
            raise ConfigError("UNIMODAL models have no visual projection")
        return self.visual_proj(Tensor(np.asarray(raw, dtype=self.dtype)))

    def visual_memory(self, visual_global: Optional[np.ndarray], proposals: Optional[np.ndarray]) -> Optional[VisualMemory]:
        if self.variant is Variant.UNIMODAL:
            return None
        if self.variant is Variant.MAG:
            if visual_global is None:
                raise ConfigError("MAG decoding needs the global image feature")
            projected = self.project_visual(visual_global)
            # single key: its attention weight is always 1
            keys = projected.reshape(projected.shape[0], 1, projected.shape[1])
        else:
            if proposals is None:
                raise ConfigError("MAOP decoding needs object proposal features")
            keys = self.project_visual(proposals)
        return VisualMemory(keys, self.visual_attention.project_keys(keys))

    def logits(self, h2: Tensor) -> Tensor:
        if self.output is None:
            return h2 @ self.embedding.weight.T
        return self.output(h2)

    def step(
        self,
        y_prev: np.ndarray,
        state: DecoderState,
        memory: EncoderMemory,
        visual: Optional[VisualMemory],
    ) -> tuple[Tensor, DecoderState, StepWeights]:
        """One decode step for a batch of previous tokens ``y_prev`` [B]."""
        if self.variant.uses_visual and visual is None:
            raise ConfigError(f"{self.variant.value} decoding needs a visual input")
        h1 = self.gru1(self.embedding(y_prev), state.h1)
        z, encoder_weights = self.encoder_attention(
            memory.states.states, h1, mask=memory.states.mask, projected_keys=memory.projected_keys
        )
        weights = StepWeights(encoder_weights.data)
        if visual is not None:
            v_att, proposal_weights = self.visual_attention(visual.keys, h1, projected_keys=visual.projected_keys)
            if self.variant is Variant.MAOP:
                weights.proposals = proposal_weights.data
            z, alphas = self.modality_attention(stack([z, v_att], axis=1), h1)
            weights.alphas = alphas.data
        h2 = self.gru2(z, state.h2)
        return self.logits(h2), DecoderState(h1, h2), weights
