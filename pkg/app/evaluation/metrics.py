"""Recovery Rate, expected visual attention, Grounding Rate and Word Accuracy."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from pydantic import BaseModel, Field

from app.asr.trace import AttentionTrace, TraceStep
from app.core.errors import ArgumentError, DanglingReferenceError, UnsupportedVariantError
from app.corpus.schemas import WordCategoryList
from app.evaluation.alignment import AlignedPair
from app.masking.spans import MaskSpec


class Rate(BaseModel):
    """A percentage with its counts; ``value`` is None when the denominator is empty."""

    numerator: int = Field(..., ge=0)
    denominator: int = Field(..., ge=0)
    value: Optional[float] = Field(None, description="Percent in [0, 100]")

    @classmethod
    def of(cls, numerator: int, denominator: int) -> "Rate":
        value = None if denominator == 0 else 100.0 * numerator / denominator
        return cls(numerator=numerator, denominator=denominator, value=value)

    @property
    def absent(self) -> bool:
        return self.value is None


@dataclass
class MaskedWord:
    """One masked reference word and what the decoder did with it."""

    utterance_id: str
    ref_index: int
    word: str
    hyp_index: Optional[int]
    recovered: bool
    step: Optional[TraceStep] = None


def masked_words(
    pairs: Mapping[str, AlignedPair],
    masks: Mapping[str, MaskSpec],
    traces: Optional[Mapping[str, AttentionTrace]] = None,
) -> list[MaskedWord]:
    """Every masked reference word of every pair, with the trace step that emitted its aligned hypothesis word."""
    dangling = sorted(set(masks) - set(pairs)) + sorted(set(pairs) - set(masks))
    if dangling:
        raise DanglingReferenceError(f"masks and decoded samples disagree on {len(dangling)} ids, e.g. {dangling[0]}")
    out = []
    for utterance_id in sorted(pairs):
        pair = pairs[utterance_id]
        for index in masks[utterance_id].masked_word_indices:
            if not 0 <= index < len(pair.reference):
                raise DanglingReferenceError(f"{utterance_id}: masked index {index} outside the reference")
            hyp_index = pair.hyp_index_for(index)
            step = None
            if traces is not None and hyp_index is not None:
                step = traces[utterance_id][hyp_index]
            out.append(MaskedWord(utterance_id, index, pair.reference[index], hyp_index, pair.is_match(index), step))
    return out


def recovered_words(words: Iterable[MaskedWord]) -> list[MaskedWord]:
    return [w for w in words if w.recovered]


def recovery_rate(pairs: Mapping[str, AlignedPair], masks: Mapping[str, MaskSpec]) -> Rate:
    words = masked_words(pairs, masks)
    return Rate.of(len(recovered_words(words)), len(words))


def rate_of_recovery(words: Sequence[MaskedWord]) -> Rate:
    return Rate.of(sum(w.recovered for w in words), len(words))


def restrict_to_category(words: Iterable[MaskedWord], category: WordCategoryList) -> list[MaskedWord]:
    return [w for w in words if w.word in category]


def expected_visual_attention(traces: Iterable[AttentionTrace]) -> float:
    """Mean alpha_v over every decode step of every trace."""
    total, count = 0.0, 0
    for trace in traces:
        if trace.steps and not trace.has_alphas:
            raise UnsupportedVariantError("expected visual attention needs MAG or MAOP traces (no alpha_v recorded)")
        total += float(trace.alpha_v().sum()) if trace.steps else 0.0
        count += len(trace)
    if count == 0:
        raise ArgumentError("expected visual attention over zero decode steps")
    return total / count


def grounding_rate(recovered: Sequence[MaskedWord], threshold: float) -> Rate:
    """Share of recovered words emitted with alpha_v strictly above ``threshold``."""
    grounded = 0
    for word in recovered:
        if word.step is None or word.step.alpha_v is None:
            raise UnsupportedVariantError(f"{word.utterance_id}: recovered word has no alpha_v to ground")
        grounded += word.step.alpha_v > threshold
    return Rate.of(int(grounded), len(recovered))


def word_accuracy(category: WordCategoryList, pairs: Iterable[AlignedPair]) -> Rate:
    """Share of the category's reference occurrences aligned to an identical hypothesis word."""
    correct = total = 0
    for pair in pairs:
        for index, word in enumerate(pair.reference):
            if word in category:
                total += 1
                correct += pair.is_match(index)
    return Rate.of(int(correct), total)
