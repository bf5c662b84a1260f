"""Image-swap probe: decode masked samples again with another image as their visual context."""
from __future__ import annotations

import logging
from dataclasses import replace
from typing import Mapping, Optional, Sequence

from pydantic import BaseModel

from app.asr.model import AsrModel
from app.core.errors import UnsupportedVariantError
from app.corpus.schemas import Corpus, CorpusSample, VisualContext
from app.evaluation.decode import decode_dataset
from app.evaluation.metrics import Rate, masked_words, rate_of_recovery
from app.masking.spans import MaskSpec

logger = logging.getLogger(__name__)


class ProbeResult(BaseModel):
    target_word: Optional[str] = None
    substitute_image_id: str
    n_samples: int
    baseline: Rate
    swapped: Rate


def _target_recovery(model: AsrModel, samples: Sequence[CorpusSample], masks: Mapping[str, MaskSpec], target_word: Optional[str]) -> Rate:
    decoded = decode_dataset(model, Corpus(list(samples), name="probe"))
    pairs = {d.utterance_id: d.pair for d in decoded}
    words = masked_words(pairs, {s.id: masks[s.id] for s in samples})
    if target_word is not None:
        words = [w for w in words if w.word == target_word.lower()]
    return rate_of_recovery(words)


def image_swap_probe(
    model: AsrModel,
    samples: Sequence[CorpusSample],
    masks: Mapping[str, MaskSpec],
    substitute: VisualContext,
    target_word: Optional[str] = None,
) -> ProbeResult:
    """Recovery of the masked (target) words with the original images and with ``substitute`` in their place."""
    if not model.variant.uses_visual:
        raise UnsupportedVariantError("the image-swap probe needs a MAG or MAOP model")
    baseline = _target_recovery(model, samples, masks, target_word)
    swapped_samples = [replace(s, visual=substitute) for s in samples]
    swapped = _target_recovery(model, swapped_samples, masks, target_word)
    logger.info(
        f"Image-swap probe on {len(samples)} samples: baseline RR {baseline.value}, with {substitute.image_id} {swapped.value}"
    )
    return ProbeResult(
        target_word=target_word,
        substitute_image_id=substitute.image_id,
        n_samples=len(samples),
        baseline=baseline,
        swapped=swapped,
    )
