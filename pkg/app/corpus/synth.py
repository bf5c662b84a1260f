"""Deterministic synthetic corpora with planted acoustic and visual signatures.

Every content word gets one fixed block of acoustic frames and one fixed
visual vector. Utterances concatenate word frames; each image carries one
proposal per content word of its utterance at a planted box, and fills the
remaining proposals with signatures of content words the utterance does not
mention. Once a content word's frames are replaced by silence, only the
image can tell which word it was.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.core.errors import ConfigError
from app.core.seeding import make_rng
from app.corpus.categories import write_category_list
from app.corpus.manifest import write_manifest
from app.corpus.schemas import (
    AnnotationEntry,
    Corpus,
    CorpusSample,
    GroundTruthAnnotation,
    Utterance,
    VisualContext,
    WordCategoryList,
)
from app.corpus.timing import frames_to_seconds

logger = logging.getLogger(__name__)

NOUNS = ["dog", "cat", "ball", "man", "woman", "child", "bike", "car", "tree", "boat",
         "horse", "bird", "frog", "hat", "shirt", "dress", "girl", "boy", "water", "grass"]
COLORS = ["red", "blue", "green", "yellow", "black", "white", "pink", "purple", "orange", "brown"]
CARDINALS = ["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"]
FUNCTION_WORDS = ["a", "an", "the", "on", "in", "with", "of", "and", "at", "is", "are", "to"]


def _word_list(base: list[str], count: int, prefix: str) -> list[str]:
    return base[:count] + [f"{prefix}{i}" for i in range(len(base), count)]


class SynthConfig(BaseModel):
    n_nouns: int = Field(20, ge=0)
    n_colors: int = Field(10, ge=0)
    n_cardinals: int = Field(10, ge=0)
    n_function_words: int = Field(12, ge=1)
    splits: dict[str, int] = Field(
        default_factory=lambda: {"train": 2000, "dev": 200, "test": 200},
        description="Utterances per split",
    )
    min_words: int = Field(4, ge=1)
    max_words: int = Field(8, ge=1)
    min_content_words: int = Field(1, ge=1)
    max_content_words: int = Field(3, ge=1)
    feature_dim: int = Field(43, ge=1)
    min_signature_frames: int = Field(8, ge=1)
    max_signature_frames: int = Field(20, ge=1)
    signature_spread: float = Field(0.5, ge=0.0, description="Within-word spread of signature frames")
    noise_sigma: float = Field(0.1, ge=0.0, description="Additive acoustic noise")
    n_proposals: int = Field(36, ge=1)
    visual_dim: int = Field(2048, ge=1)
    visual_noise_sigma: float = Field(0.1, ge=0.0)
    image_width: float = Field(640.0, gt=0)
    image_height: float = Field(480.0, gt=0)

    @model_validator(mode="after")
    def _consistent(self):
        n_content = self.n_nouns + self.n_colors + self.n_cardinals
        if self.max_content_words > n_content:
            raise ValueError(f"max_content_words={self.max_content_words} exceeds the {n_content} content words")
        if self.min_content_words > self.max_content_words:
            raise ValueError("min_content_words exceeds max_content_words")
        if self.min_words > self.max_words:
            raise ValueError("min_words exceeds max_words")
        if self.max_content_words > self.min_words:
            raise ValueError("max_content_words must fit in the shortest utterance (min_words)")
        if self.max_content_words > self.n_proposals:
            raise ValueError("every planted content word needs its own proposal")
        if self.min_signature_frames > self.max_signature_frames:
            raise ValueError("min_signature_frames exceeds max_signature_frames")
        return self

    def content_categories(self) -> dict[str, list[str]]:
        return {
            "nouns": _word_list(NOUNS, self.n_nouns, "noun"),
            "colors": _word_list(COLORS, self.n_colors, "color"),
            "cardinals": _word_list(CARDINALS, self.n_cardinals, "cardinal"),
        }

    def function_words(self) -> list[str]:
        return _word_list(FUNCTION_WORDS, self.n_function_words, "fn")


@dataclass
class SynthCorpus:
    splits: dict[str, Corpus]
    categories: list[WordCategoryList]
    acoustic_signatures: dict[str, np.ndarray] = field(default_factory=dict)
    visual_signatures: dict[str, np.ndarray] = field(default_factory=dict)


def _random_box(rng: np.random.Generator, config: SynthConfig) -> tuple[float, float, float, float]:
    w = rng.uniform(0.2, 0.5) * config.image_width
    h = rng.uniform(0.2, 0.5) * config.image_height
    x1 = rng.uniform(0.0, config.image_width - w)
    y1 = rng.uniform(0.0, config.image_height - h)
    return (round(x1, 1), round(y1, 1), round(x1 + w, 1), round(y1 + h, 1))


def _make_signatures(config: SynthConfig, seed: int, content: list[str], function: list[str]):
    rng = make_rng(seed, "synth/signatures")
    acoustic: dict[str, np.ndarray] = {}
    for word in content + function:
        length = int(rng.integers(config.min_signature_frames, config.max_signature_frames + 1))
        center = rng.normal(0.0, 1.0, size=config.feature_dim)
        frames = center + config.signature_spread * rng.normal(0.0, 1.0, size=(length, config.feature_dim))
        acoustic[word] = frames.astype(np.float32)
    visual = {word: rng.normal(0.0, 1.0, size=config.visual_dim).astype(np.float32) for word in content}
    return acoustic, visual


def _make_sample(
    index: int,
    split: str,
    rng: np.random.Generator,
    config: SynthConfig,
    content: list[str],
    function: list[str],
    acoustic: dict[str, np.ndarray],
    visual: dict[str, np.ndarray],
) -> CorpusSample:
    n_words = int(rng.integers(config.min_words, config.max_words + 1))
    n_content = int(rng.integers(config.min_content_words, config.max_content_words + 1))
    chosen = [content[i] for i in rng.choice(len(content), size=n_content, replace=False)]
    positions = sorted(int(p) for p in rng.choice(n_words, size=n_content, replace=False))
    words = [function[int(i)] for i in rng.integers(0, len(function), size=n_words)]
    for position, word in zip(positions, chosen):
        words[position] = word

    blocks, alignments, offset = [], [], 0
    for word in words:
        block = acoustic[word]
        blocks.append(block)
        alignments.append((frames_to_seconds(offset), frames_to_seconds(offset + block.shape[0])))
        offset += block.shape[0]
    features = np.concatenate(blocks, axis=0)
    if config.noise_sigma > 0:
        features = features + config.noise_sigma * rng.normal(0.0, 1.0, size=features.shape)
    utterance_id = f"{split}-{index:05d}"
    utterance = Utterance(utterance_id, words, alignments, features.astype(np.float32))

    distractor_pool = [w for w in content if w not in chosen]
    n_distractors = config.n_proposals - n_content
    replace = n_distractors > len(distractor_pool)
    distractors = [distractor_pool[i] for i in rng.choice(len(distractor_pool), size=n_distractors, replace=replace)]
    proposal_words = chosen + distractors
    boxes = np.array([_random_box(rng, config) for _ in proposal_words], dtype=np.float64)
    feats = np.stack([visual[w] for w in proposal_words]).astype(np.float64)
    if config.visual_noise_sigma > 0:
        feats = feats + config.visual_noise_sigma * rng.normal(0.0, 1.0, size=feats.shape)
    order = rng.permutation(len(proposal_words))
    boxes, feats = boxes[order], feats[order].astype(np.float32)
    image = VisualContext(
        image_id=f"img-{utterance_id}",
        global_feature=feats.mean(axis=0).astype(np.float32),
        proposal_boxes=boxes,
        proposal_features=feats,
    )

    planted_box = {proposal_words[j]: tuple(boxes[k]) for k, j in enumerate(order)}
    annotation = GroundTruthAnnotation(
        utterance_id,
        [AnnotationEntry((position,), planted_box[word]) for position, word in zip(positions, chosen)],
    )
    return CorpusSample(utterance, image, annotation)


def synthesize_corpus(config: SynthConfig, seed: int, out_dir: Optional[Path] = None) -> SynthCorpus:
    """Generate every split of ``config``; write manifests and category lists when ``out_dir`` is given."""
    categories = config.content_categories()
    content = [w for words in categories.values() for w in words]
    function = config.function_words()
    if len(set(content + function)) != len(content) + len(function):
        raise ConfigError("synthetic vocabulary contains duplicate words")
    acoustic, visual = _make_signatures(config, seed, content, function)

    splits: dict[str, Corpus] = {}
    for split, count in config.splits.items():
        rng = make_rng(seed, f"synth/split/{split}")
        samples = [_make_sample(i, split, rng, config, content, function, acoustic, visual) for i in range(count)]
        splits[split] = Corpus(samples, name=split)

    category_lists = [WordCategoryList(name, frozenset(words)) for name, words in categories.items() if words]
    category_lists.append(WordCategoryList("function_words", frozenset(function)))
    result = SynthCorpus(splits, category_lists, acoustic, visual)

    if out_dir is not None:
        out_dir = Path(out_dir)
        for split, corpus in splits.items():
            write_manifest(corpus, out_dir / split)
        for category in category_lists:
            write_category_list(category, out_dir / "categories")
        logger.info(f"Synthesized {sum(len(c) for c in splits.values())} utterances into {out_dir}")
    return result
