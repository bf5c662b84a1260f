"""Masked datasets: the four-way augmentation, single-probability masking and category masking.

A masked dataset directory is an ordinary split manifest (features already
silenced, alignments moved onto the masked timeline) plus ``masks.jsonl``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from pydantic import Field

from app.core.errors import ArgumentError
from app.core.seeding import make_rng
from app.corpus.manifest import read_jsonl, write_jsonl, write_manifest, load_manifest
from app.corpus.schemas import Corpus, CorpusSample, GroundTruthAnnotation, Utterance
from app.masking.selection import select_category_mask, select_random_mask
from app.masking.spans import SILENCE_FRAMES, MaskSpec, apply_mask, build_mask_spec, remap_alignments

logger = logging.getLogger(__name__)

MASKING_PROBABILITIES = (0.0, 0.2, 0.4, 0.6)
MASKS_FILE = "masks.jsonl"


class MaskRecord(MaskSpec):
    base_utterance_id: str
    probability: Optional[float] = Field(None, description="Masking probability, absent for category masks")
    category: Optional[str] = Field(None, description="Category name for category masks")


@dataclass
class AugmentedSample:
    sample_id: str
    base_utterance_id: str
    masking_probability: Optional[float]
    mask: MaskSpec
    masked_features: np.ndarray
    masked_alignments: list[tuple[float, float]] = field(default_factory=list)
    category: Optional[str] = None

    def record(self) -> MaskRecord:
        return MaskRecord(
            **self.mask.model_dump(),
            base_utterance_id=self.base_utterance_id,
            probability=self.masking_probability,
            category=self.category,
        )


@dataclass
class MaskedDataset:
    """A loaded split together with its masks (None for clean data)."""

    corpus: Corpus
    masks: Optional[dict[str, MaskRecord]] = None

    @property
    def is_masked(self) -> bool:
        return self.masks is not None


def augmented_sample_id(utterance_id: str, probability: float) -> str:
    return f"{utterance_id}@m{int(round(probability * 100)):02d}"


def mask_utterance(
    utterance: Utterance,
    indices: Iterable[int],
    sample_id: Optional[str] = None,
    probability: Optional[float] = None,
    category: Optional[str] = None,
    expand: bool = True,
    silence_frames: int = SILENCE_FRAMES,
) -> AugmentedSample:
    sample_id = sample_id or utterance.id
    spec = build_mask_spec(utterance, indices, expand=expand, utterance_id=sample_id)
    features = apply_mask(utterance.features, spec.masked_frame_spans, silence_frames)
    alignments = remap_alignments(utterance.alignments, utterance.n_frames, spec.masked_frame_spans, silence_frames)
    return AugmentedSample(sample_id, utterance.id, probability, spec, features, alignments, category)


def mask_at_probability(
    corpus: Corpus,
    p: float,
    seed: int,
    expand: bool = True,
    sample_id_suffix: bool = False,
) -> list[AugmentedSample]:
    if not 0.0 <= p <= 1.0:
        raise ArgumentError(f"masking probability must be in [0, 1], got {p}")
    samples = []
    for sample in corpus:
        utt = sample.utterance
        rng = make_rng(seed, f"mask/{utt.id}/{p:.2f}")
        indices = select_random_mask(utt.words, p, rng)
        sample_id = augmented_sample_id(utt.id, p) if sample_id_suffix else utt.id
        samples.append(mask_utterance(utt, indices, sample_id, probability=p, expand=expand))
    return samples


def augment(
    corpus: Corpus,
    seed: int,
    probabilities: Iterable[float] = MASKING_PROBABILITIES,
    expand: bool = True,
) -> list[AugmentedSample]:
    """One masked copy of every utterance per probability; transcripts and images are untouched."""
    probabilities = tuple(probabilities)
    per_level = [mask_at_probability(corpus, p, seed, expand, sample_id_suffix=True) for p in probabilities]
    # utterance-major order keeps an utterance's copies together
    return [level[i] for i in range(len(corpus)) for level in per_level]


def mask_by_category(corpus: Corpus, category_name: str, words: Iterable[str], expand: bool = True) -> list[AugmentedSample]:
    members = {w.lower() for w in words}
    return [
        mask_utterance(s.utterance, select_category_mask(s.utterance.words, members), category=category_name, expand=expand)
        for s in corpus
    ]


def masked_corpus(samples: list[AugmentedSample], corpus: Corpus) -> Corpus:
    """Corpus whose utterances carry the masked features; images and annotations follow their base utterance."""
    out = []
    for aug in samples:
        base = corpus[aug.base_utterance_id]
        utterance = Utterance(aug.sample_id, list(base.utterance.words), aug.masked_alignments, aug.masked_features)
        annotation = None
        if base.annotation is not None:
            annotation = GroundTruthAnnotation(aug.sample_id, list(base.annotation.entries))
        out.append(CorpusSample(utterance, base.visual, annotation))
    return Corpus(out, name=corpus.name)


def write_masked_dataset(samples: list[AugmentedSample], corpus: Corpus, out_dir: Path) -> MaskedDataset:
    dataset = MaskedDataset(masked_corpus(samples, corpus), {s.sample_id: s.record() for s in samples})
    write_manifest(dataset.corpus, out_dir)
    write_jsonl(Path(out_dir) / MASKS_FILE, [s.record() for s in samples])
    masked = sum(len(s.mask.masked_word_indices) for s in samples)
    logger.info(f"Wrote {len(samples)} masked samples ({masked} masked words) to {out_dir}")
    return dataset


def read_masks(path: Path) -> dict[str, MaskRecord]:
    return {record.utterance_id: record for record in read_jsonl(path, MaskRecord)}


def load_dataset(path: Path) -> MaskedDataset:
    path = Path(path)
    corpus = load_manifest(path)
    masks = read_masks(path / MASKS_FILE) if (path / MASKS_FILE).is_file() else None
    return MaskedDataset(corpus, masks)
