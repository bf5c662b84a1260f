"""Frame-span arithmetic for silencing words."""
from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from app.core.errors import ArgumentError
from app.corpus.schemas import FRAME_HOP_SEC, Utterance
from app.corpus.timing import frames_to_seconds, seconds_to_frames

EXPANSION_RATIO = 0.25
SILENCE_FRAMES = 50

Span = tuple[int, int]


class MaskSpec(BaseModel):
    utterance_id: str
    masked_word_indices: list[int] = Field(default_factory=list, description="Sorted transcript positions")
    masked_frame_spans: list[tuple[int, int]] = Field(
        default_factory=list, description="Merged, sorted [start, end) frame spans"
    )


def expand_span(span: tuple[float, float], utterance_duration: float, ratio: float = EXPANSION_RATIO) -> tuple[float, float]:
    start, end = span
    if start > end:
        raise ArgumentError(f"span starts after it ends: ({start}, {end})")
    d = end - start
    return max(0.0, start - ratio * d), min(utterance_duration, end + ratio * d)


def merge_spans(spans: Iterable[Span]) -> list[Span]:
    """Union of half-open spans as maximal disjoint spans; empty spans vanish."""
    merged: list[list[int]] = []
    for start, end in sorted((int(s), int(e)) for s, e in spans if e > s):
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return [(s, e) for s, e in merged]


def _check_spans(spans: Sequence[Span], n_frames: int) -> None:
    previous_end = 0
    for start, end in spans:
        if start < previous_end or start > end:
            raise ArgumentError(f"mask spans must be sorted and non-overlapping (merge first): {list(spans)}")
        if end > n_frames:
            raise ArgumentError(f"mask span ({start}, {end}) runs past the {n_frames}-frame utterance")
        previous_end = end


def apply_mask(
    features: np.ndarray,
    masked_frame_spans: Sequence[Span],
    silence_frames: int = SILENCE_FRAMES,
    silence_vector: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Cut every span out of ``features`` and put ``silence_frames`` silence rows in its place."""
    _check_spans(masked_frame_spans, features.shape[0])
    if silence_vector is None:
        silence_vector = np.zeros(features.shape[1], dtype=features.dtype)
    silence = np.broadcast_to(silence_vector.astype(features.dtype), (silence_frames, features.shape[1]))
    pieces, cursor = [], 0
    for start, end in masked_frame_spans:
        pieces.append(features[cursor:start])
        pieces.append(silence)
        cursor = end
    pieces.append(features[cursor:])
    return np.concatenate(pieces, axis=0)


def masked_length(n_frames: int, spans: Sequence[Span], silence_frames: int = SILENCE_FRAMES) -> int:
    return n_frames - sum(e - s for s, e in spans) + len(spans) * silence_frames


def map_frame(frame: int, spans: Sequence[Span], silence_frames: int = SILENCE_FRAMES) -> int:
    """Position of an original frame boundary on the masked timeline."""
    shift = 0
    for start, end in spans:
        if frame < start:
            break
        if frame >= end:
            shift += silence_frames - (end - start)
            continue
        return start + shift + (frame - start) * silence_frames // (end - start)
    return frame + shift


def remap_alignments(
    alignments: Sequence[tuple[float, float]],
    n_frames: int,
    spans: Sequence[Span],
    silence_frames: int = SILENCE_FRAMES,
) -> list[tuple[float, float]]:
    remapped = []
    for span in alignments:
        start, end = seconds_to_frames(span, n_frames)
        remapped.append((
            frames_to_seconds(map_frame(start, spans, silence_frames)),
            frames_to_seconds(map_frame(end, spans, silence_frames)),
        ))
    return remapped


def build_mask_spec(
    utterance: Utterance,
    masked_word_indices: Iterable[int],
    expand: bool = True,
    ratio: float = EXPANSION_RATIO,
    utterance_id: Optional[str] = None,
) -> MaskSpec:
    indices = sorted(set(int(i) for i in masked_word_indices))
    for index in indices:
        if not 0 <= index < len(utterance.words):
            raise ArgumentError(f"utterance {utterance.id}: masked index {index} outside {len(utterance.words)} words")
    duration = utterance.n_frames * FRAME_HOP_SEC
    frame_spans = []
    for index in indices:
        span = utterance.alignments[index]
        if expand:
            span = expand_span(span, duration, ratio)
        frame_spans.append(seconds_to_frames(span, utterance.n_frames))
    return MaskSpec(
        utterance_id=utterance_id or utterance.id,
        masked_word_indices=indices,
        masked_frame_spans=merge_spans(frame_spans),
    )
