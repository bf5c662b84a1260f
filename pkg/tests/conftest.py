from pathlib import Path

import numpy as np
import pytest

from app.asr.config import ModelConfig, Variant
from app.asr.model import AsrModel
from app.corpus.schemas import CorpusSample, Utterance, VisualContext
from app.corpus.synth import SynthConfig, synthesize_corpus
from app.corpus.timing import frames_to_seconds
from app.corpus.vocab import build_vocab

TINY_SYNTH = {
    "n_nouns": 4,
    "n_colors": 2,
    "n_cardinals": 2,
    "n_function_words": 3,
    "splits": {"train": 6, "dev": 3, "test": 3},
    "min_words": 3,
    "max_words": 4,
    "min_content_words": 1,
    "max_content_words": 2,
    "feature_dim": 5,
    "min_signature_frames": 3,
    "max_signature_frames": 5,
    "n_proposals": 4,
    "visual_dim": 6,
}

TINY_MODEL = {
    "feature_dim": 5,
    "enc_hidden": 8,
    "dec_hidden": 8,
    "emb_dim": 8,
    "attn_dim": 6,
    "n_proposals": 4,
    "visual_in_dim": 6,
    "visual_proj_dim": 8,
    "dtype": "float64",
}


@pytest.fixture(scope="session")
def synth():
    return synthesize_corpus(SynthConfig(**TINY_SYNTH), seed=0)


@pytest.fixture(scope="session")
def vocab(synth):
    return build_vocab(synth.splits["train"])


@pytest.fixture
def synth_dir(tmp_path: Path) -> Path:
    out = tmp_path / "synth"
    synthesize_corpus(SynthConfig(**TINY_SYNTH), seed=0, out_dir=out)
    return out


def tiny_config(variant: Variant, vocab_size: int, **overrides) -> ModelConfig:
    return ModelConfig(**{**TINY_MODEL, "variant": variant, "vocab_size": vocab_size, **overrides})


@pytest.fixture
def make_model(vocab):
    def _make(variant: Variant = Variant.MAOP, seed: int = 0, **overrides) -> AsrModel:
        return AsrModel(tiny_config(variant, len(vocab), **overrides), vocab, seed=seed)

    return _make


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_samples(
    rng: np.random.Generator,
    words: list[str],
    n_samples: int,
    n_frames: tuple[int, int],
    n_words: tuple[int, int],
    feature_dim: int = 5,
    visual_dim: int = 6,
    n_proposals: int = 4,
) -> list[CorpusSample]:
    """Gaussian utterances with evenly split alignments and random, well-formed proposal boxes."""
    samples = []
    for i in range(n_samples):
        frames = int(rng.integers(n_frames[0], n_frames[1] + 1))
        k = int(rng.integers(n_words[0], n_words[1] + 1))
        edges = [j * frames // k for j in range(k + 1)]
        utterance = Utterance(
            f"rand-{i:05d}",
            [words[int(w)] for w in rng.integers(0, len(words), size=k)],
            [(frames_to_seconds(a), frames_to_seconds(b)) for a, b in zip(edges, edges[1:])],
            rng.normal(size=(frames, feature_dim)),
        )
        corners = rng.uniform(0.0, 50.0, size=(n_proposals, 2))
        boxes = np.concatenate([corners, corners + rng.uniform(1.0, 50.0, size=(n_proposals, 2))], axis=1)
        features = rng.normal(size=(n_proposals, visual_dim))
        visual = VisualContext(f"img-rand-{i:05d}", features.mean(axis=0), boxes, features)
        samples.append(CorpusSample(utterance, visual))
    return samples
