"""Split directories on disk.

A split directory holds ``utterances.jsonl``, ``images.jsonl``,
``annotations.jsonl`` and ``links.jsonl`` plus a ``features/`` tree of
binary matrices. Only ``utterances.jsonl`` is required; a split without
images is a visual-free corpus.
"""
from __future__ import annotations

import json
import logging
import re
from pathlib import Path
from typing import Iterator, Optional, Type, TypeVar

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from app.core.errors import AsrError, DanglingReferenceError, MalformedRecordError, ManifestNotFoundError
from app.corpus.features import read_feature_file, write_feature_file
from app.corpus.schemas import (
    AnnotationEntry,
    Corpus,
    CorpusSample,
    GroundTruthAnnotation,
    Utterance,
    VisualContext,
    check_box,
)

logger = logging.getLogger(__name__)

UTTERANCES_FILE = "utterances.jsonl"
IMAGES_FILE = "images.jsonl"
ANNOTATIONS_FILE = "annotations.jsonl"
LINKS_FILE = "links.jsonl"


class UtteranceRecord(BaseModel):
    id: str = Field(..., min_length=1, description="Utterance id, unique within the split")
    words: list[str] = Field(..., description="Transcript words")
    alignments: list[tuple[float, float]] = Field(..., description="Per-word (start_sec, end_sec)")
    features: str = Field(..., description="Feature file path relative to the split directory")


class ProposalSetRecord(BaseModel):
    boxes: list[tuple[float, float, float, float]] = Field(..., description="(x1, y1, x2, y2) pixel boxes")
    features: str = Field(..., description="Proposal feature matrix file, one row per box")


class ImageRecord(BaseModel):
    image_id: str = Field(..., min_length=1)
    global_feature: str = Field(..., description="Global feature file (1 x dim)")
    proposals: Optional[ProposalSetRecord] = Field(None, description="Object proposals, absent for global-only images")


class AnnotationEntryRecord(BaseModel):
    word_indices: list[int] = Field(..., description="Transcript positions covered by the phrase")
    box: tuple[float, float, float, float]


class AnnotationRecord(BaseModel):
    utterance_id: str
    entries: list[AnnotationEntryRecord] = Field(default_factory=list)


class LinkRecord(BaseModel):
    utterance_id: str
    image_id: str


RecordT = TypeVar("RecordT", bound=BaseModel)


def safe_file_stem(identifier: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", identifier)


def read_jsonl(path: Path, model: Type[RecordT]) -> Iterator[RecordT]:
    with path.open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield model.model_validate_json(line)
            except ValidationError as e:
                raise MalformedRecordError(f"{path.name} line {line_no}: {e.errors()[0]['msg']} in {line.strip()[:120]}")


def write_jsonl(path: Path, records: list[BaseModel]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for record in records:
            f.write(record.model_dump_json() + "\n")


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_images(split_dir: Path) -> dict[str, VisualContext]:
    path = split_dir / IMAGES_FILE
    images: dict[str, VisualContext] = {}
    if not path.is_file():
        return images
    for record in read_jsonl(path, ImageRecord):
        try:
            global_feature = read_feature_file(split_dir / record.global_feature).reshape(-1)
            boxes = features = None
            if record.proposals is not None:
                boxes = np.asarray(record.proposals.boxes, dtype=np.float64).reshape(-1, 4)
                features = read_feature_file(split_dir / record.proposals.features)
            images[record.image_id] = VisualContext(record.image_id, global_feature, boxes, features)
        except AsrError as e:
            raise type(e)(f"image {record.image_id}: {e.detail}")
    return images


def load_manifest(path: Path) -> Corpus:
    """Load and validate one split directory."""
    split_dir = Path(path)
    utterances_path = split_dir / UTTERANCES_FILE
    if not utterances_path.is_file():
        raise ManifestNotFoundError(f"no {UTTERANCES_FILE} in {split_dir}")

    images = _load_images(split_dir)

    links: dict[str, str] = {}
    if (split_dir / LINKS_FILE).is_file():
        for link in read_jsonl(split_dir / LINKS_FILE, LinkRecord):
            if link.image_id not in images:
                raise DanglingReferenceError(f"utterance {link.utterance_id} links to unknown image {link.image_id}")
            links[link.utterance_id] = link.image_id

    annotations: dict[str, GroundTruthAnnotation] = {}
    if (split_dir / ANNOTATIONS_FILE).is_file():
        for record in read_jsonl(split_dir / ANNOTATIONS_FILE, AnnotationRecord):
            entries = [
                AnnotationEntry(tuple(e.word_indices), check_box(e.box, f"annotation {record.utterance_id}"))
                for e in record.entries
            ]
            annotations[record.utterance_id] = GroundTruthAnnotation(record.utterance_id, entries)

    samples: list[CorpusSample] = []
    for record in read_jsonl(utterances_path, UtteranceRecord):
        try:
            features = read_feature_file(split_dir / record.features)
        except AsrError as e:
            raise type(e)(f"utterance {record.id}: {e.detail}")
        utterance = Utterance(record.id, list(record.words), [tuple(a) for a in record.alignments], features)
        annotation = annotations.pop(record.id, None)
        if annotation is not None:
            annotation.validate(len(utterance.words))
        visual = images[links.pop(record.id)] if record.id in links else None
        samples.append(CorpusSample(utterance, visual, annotation))

    if links:
        raise DanglingReferenceError(f"link for unknown utterance {sorted(links)[0]}")
    if annotations:
        raise DanglingReferenceError(f"annotation for unknown utterance {sorted(annotations)[0]}")

    corpus = Corpus(samples, name=split_dir.name)
    logger.info(f"Loaded {len(corpus)} utterances and {len(images)} images from {split_dir}")
    return corpus


def write_manifest(corpus: Corpus, path: Path) -> None:
    split_dir = Path(path)
    split_dir.mkdir(parents=True, exist_ok=True)
    utterances, images, annotations, links = [], [], [], []
    written_images: set[str] = set()

    for sample in corpus:
        utt = sample.utterance
        feature_path = f"features/utterances/{safe_file_stem(utt.id)}.bin"
        write_feature_file(split_dir / feature_path, utt.features)
        utterances.append(UtteranceRecord(id=utt.id, words=utt.words, alignments=utt.alignments, features=feature_path))

        if sample.visual is not None:
            visual = sample.visual
            links.append(LinkRecord(utterance_id=utt.id, image_id=visual.image_id))
            if visual.image_id not in written_images:
                written_images.add(visual.image_id)
                stem = f"features/images/{safe_file_stem(visual.image_id)}"
                write_feature_file(split_dir / f"{stem}.global.bin", visual.global_feature.reshape(1, -1))
                proposals = None
                if visual.has_proposals:
                    write_feature_file(split_dir / f"{stem}.proposals.bin", visual.proposal_features)
                    proposals = ProposalSetRecord(
                        boxes=[tuple(float(v) for v in box) for box in visual.proposal_boxes],
                        features=f"{stem}.proposals.bin",
                    )
                images.append(ImageRecord(image_id=visual.image_id, global_feature=f"{stem}.global.bin", proposals=proposals))

        if sample.annotation is not None:
            annotations.append(AnnotationRecord(
                utterance_id=utt.id,
                entries=[AnnotationEntryRecord(word_indices=list(e.word_indices), box=e.box) for e in sample.annotation.entries],
            ))

    write_jsonl(split_dir / UTTERANCES_FILE, utterances)
    write_jsonl(split_dir / IMAGES_FILE, images)
    write_jsonl(split_dir / ANNOTATIONS_FILE, annotations)
    write_jsonl(split_dir / LINKS_FILE, links)
    logger.info(f"Wrote {len(utterances)} utterances and {len(images)} images to {split_dir}")
