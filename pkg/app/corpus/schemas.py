"""In-memory corpus types. Arrays live here; the JSON line shapes are in ``manifest``."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from app.core.errors import AlignmentMismatchError, ArgumentError, CorpusValidationError

FRAME_HOP_SEC = 0.01
FEATURE_DIM = 43
ALIGNMENT_TOLERANCE_SEC = 0.05

Box = tuple[float, float, float, float]


def check_box(box: Box, owner: str) -> Box:
    if len(box) != 4:
        raise CorpusValidationError(f"{owner}: box {box} must have four coordinates")
    x1, y1, x2, y2 = (float(v) for v in box)
    if not (x1 < x2 and y1 < y2):
        raise CorpusValidationError(f"{owner}: box {box} is not well formed (need x1 < x2 and y1 < y2)")
    return (x1, y1, x2, y2)


@dataclass
class Utterance:
    id: str
    words: list[str]
    alignments: list[tuple[float, float]]
    features: np.ndarray  # [frames, feature_dim]

    def __post_init__(self):
        if self.features.ndim != 2:
            raise CorpusValidationError(f"utterance {self.id}: features must be a matrix, got shape {self.features.shape}")
        if len(self.alignments) != len(self.words):
            raise CorpusValidationError(
                f"utterance {self.id}: {len(self.alignments)} alignments for {len(self.words)} words"
            )
        previous_start = 0.0
        for start, end in self.alignments:
            if start < 0 or end < 0 or start > end:
                raise CorpusValidationError(f"utterance {self.id}: invalid alignment span ({start}, {end})")
            if start < previous_start:
                raise CorpusValidationError(f"utterance {self.id}: alignment starts are not non-decreasing")
            previous_start = start
        if self.alignments:
            last_end = self.alignments[-1][1]
            limit = self.n_frames * FRAME_HOP_SEC + ALIGNMENT_TOLERANCE_SEC
            if last_end > limit + 1e-9:
                raise AlignmentMismatchError(
                    f"utterance {self.id}: last word ends at {last_end}s but features cover only "
                    f"{self.n_frames} frames ({self.n_frames * FRAME_HOP_SEC:.2f}s)"
                )

    @property
    def n_frames(self) -> int:
        return int(self.features.shape[0])

    @property
    def duration(self) -> float:
        return self.n_frames * FRAME_HOP_SEC


@dataclass
class VisualContext:
    image_id: str
    global_feature: np.ndarray  # [visual_dim]
    proposal_boxes: Optional[np.ndarray] = None  # [N, 4]
    proposal_features: Optional[np.ndarray] = None  # [N, visual_dim]

    def __post_init__(self):
        if self.global_feature.ndim != 1:
            raise CorpusValidationError(f"image {self.image_id}: global feature must be a vector")
        if (self.proposal_boxes is None) != (self.proposal_features is None):
            raise CorpusValidationError(f"image {self.image_id}: proposal boxes and features must come together")
        if self.proposal_boxes is not None:
            if self.proposal_boxes.shape[0] != self.proposal_features.shape[0]:
                raise CorpusValidationError(
                    f"image {self.image_id}: {self.proposal_boxes.shape[0]} boxes for "
                    f"{self.proposal_features.shape[0]} proposal features"
                )
            for box in self.proposal_boxes:
                check_box(tuple(box), f"image {self.image_id}")

    @property
    def has_proposals(self) -> bool:
        return self.proposal_boxes is not None

    @property
    def n_proposals(self) -> int:
        return 0 if self.proposal_boxes is None else int(self.proposal_boxes.shape[0])


@dataclass
class AnnotationEntry:
    word_indices: tuple[int, ...]
    box: Box


@dataclass
class GroundTruthAnnotation:
    utterance_id: str
    entries: list[AnnotationEntry] = field(default_factory=list)

    def validate(self, n_words: int) -> None:
        for entry in self.entries:
            check_box(entry.box, f"annotation {self.utterance_id}")
            for index in entry.word_indices:
                if not 0 <= index < n_words:
                    raise CorpusValidationError(
                        f"annotation {self.utterance_id}: word index {index} outside transcript of {n_words} words"
                    )

    def boxes_for(self, word_index: int) -> list[Box]:
        return [entry.box for entry in self.entries if word_index in entry.word_indices]


@dataclass(frozen=True)
class WordCategoryList:
    name: str
    words: frozenset[str]

    def __post_init__(self):
        normalized = frozenset(w.strip().lower() for w in self.words if w.strip())
        if not normalized:
            raise ArgumentError(f"word category {self.name!r} is empty")
        object.__setattr__(self, "words", normalized)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.words


@dataclass
class CorpusSample:
    utterance: Utterance
    visual: Optional[VisualContext] = None
    annotation: Optional[GroundTruthAnnotation] = None

    @property
    def id(self) -> str:
        return self.utterance.id


@dataclass
class Corpus:
    samples: list[CorpusSample] = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        self._index = {s.id: s for s in self.samples}
        if len(self._index) != len(self.samples):
            raise CorpusValidationError(f"corpus {self.name!r}: duplicate utterance ids")
        counts = {s.visual.n_proposals for s in self.samples if s.visual is not None and s.visual.has_proposals}
        if len(counts) > 1:
            raise CorpusValidationError(f"corpus {self.name!r}: proposal counts differ across images: {sorted(counts)}")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[CorpusSample]:
        return iter(self.samples)

    def __getitem__(self, sample_id: str) -> CorpusSample:
        return self._index[sample_id]

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self._index

    @property
    def has_visual(self) -> bool:
        return bool(self.samples) and all(s.visual is not None for s in self.samples)

    @property
    def has_proposals(self) -> bool:
        return self.has_visual and all(s.visual.has_proposals for s in self.samples)

    @property
    def n_proposals(self) -> Optional[int]:
        for s in self.samples:
            if s.visual is not None and s.visual.has_proposals:
                return s.visual.n_proposals
        return None

    def images(self) -> dict[str, VisualContext]:
        return {s.visual.image_id: s.visual for s in self.samples if s.visual is not None}
