from __future__ import annotations

from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, model_validator


class Variant(str, Enum):
    UNIMODAL = "UNIMODAL"
    MAG = "MAG"
    MAOP = "MAOP"

    @property
    def uses_visual(self) -> bool:
        return self is not Variant.UNIMODAL


class ModelConfig(BaseModel):
    """Architecture of one ASR variant.

    ``enc_hidden`` is the width of the concatenated bidirectional encoder
    output; each direction gets half of it.
    """

    variant: Variant = Variant.UNIMODAL
    feature_dim: int = Field(43, ge=1)
    enc_layers: int = Field(6, ge=1)
    enc_hidden: int = Field(256, ge=2)
    subsample_layers: list[int] = Field(default_factory=lambda: [3, 4], description="1-based layers followed by a 2x drop")
    dec_hidden: int = Field(256, ge=1)
    emb_dim: int = Field(256, ge=1)
    attn_dim: int = Field(256, ge=1)
    vocab_size: int = Field(..., ge=5)
    n_proposals: int = Field(36, ge=1)
    visual_in_dim: int = Field(2048, ge=1)
    visual_proj_dim: int = Field(256, ge=1)
    tie_embeddings: bool = True
    beam_width: int = Field(1, ge=1, description="1 means greedy decoding")
    max_decode_len: int = Field(60, ge=0)
    dtype: str = Field("float32", pattern="^float(32|64)$")

    @model_validator(mode="after")
    def _consistent(self):
        if self.enc_hidden % 2:
            raise ValueError(f"enc_hidden={self.enc_hidden} must be even to split across directions")
        if self.tie_embeddings and self.emb_dim != self.dec_hidden:
            raise ValueError(f"tied embeddings need emb_dim == dec_hidden, got {self.emb_dim} and {self.dec_hidden}")
        for layer in self.subsample_layers:
            if not 1 <= layer <= self.enc_layers:
                raise ValueError(f"subsample layer {layer} outside [1, {self.enc_layers}]")
        if len(set(self.subsample_layers)) != len(self.subsample_layers):
            raise ValueError("subsample layers must be distinct")
        if self.variant.uses_visual and self.visual_proj_dim != self.enc_hidden:
            raise ValueError(
                f"hierarchical attention needs visual_proj_dim == enc_hidden, got {self.visual_proj_dim} and {self.enc_hidden}"
            )
        return self

    @property
    def numpy_dtype(self) -> np.dtype:
        return np.dtype(self.dtype)

    @property
    def min_source_frames(self) -> int:
        return 2 ** len(self.subsample_layers)

    def encoded_length(self, n_frames: int) -> int:
        for _ in self.subsample_layers:
            n_frames = -(-n_frames // 2)
        return n_frames

    def decode_cap(self, n_words: int | None = None) -> int:
        """min(2 x reference words, max_decode_len) when the word count is known."""
        if n_words is None:
            return self.max_decode_len
        return min(2 * n_words, self.max_decode_len)

    def compatibility_key(self) -> tuple:
        """Everything except vocabulary and decoding knobs must match to share weights."""
        return (
            self.variant, self.feature_dim, self.enc_layers, self.enc_hidden, tuple(self.subsample_layers),
            self.dec_hidden, self.emb_dim, self.attn_dim, self.visual_in_dim, self.visual_proj_dim,
            self.tie_embeddings,
        )
