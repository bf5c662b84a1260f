from app.corpus.manifest import load_manifest, write_manifest
from app.corpus.schemas import (
    Corpus,
    CorpusSample,
    GroundTruthAnnotation,
    Utterance,
    VisualContext,
    WordCategoryList,
)
from app.corpus.synth import SynthConfig, synthesize_corpus
from app.corpus.timing import seconds_to_frames
from app.corpus.vocab import Vocabulary, build_vocab

__all__ = [
    "Corpus",
    "CorpusSample",
    "GroundTruthAnnotation",
    "SynthConfig",
    "Utterance",
    "VisualContext",
    "Vocabulary",
    "WordCategoryList",
    "build_vocab",
    "load_manifest",
    "seconds_to_frames",
    "synthesize_corpus",
    "write_manifest",
]
