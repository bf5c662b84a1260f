import json
from pathlib import Path

import numpy as np
import pytest

from app.core.config import parse_config
from app.core.errors import (
    AlignmentMismatchError,
    ArgumentError,
    ConfigError,
    CorpusValidationError,
    DanglingReferenceError,
    ManifestNotFoundError,
)
from app.corpus.categories import load_category_dir
from app.corpus.features import read_feature_file, write_feature_file
from app.corpus.manifest import LINKS_FILE, UTTERANCES_FILE, load_manifest, write_manifest
from app.corpus.schemas import Utterance
from app.corpus.synth import SynthConfig, synthesize_corpus
from app.corpus.timing import seconds_to_frames
from app.corpus.vocab import RESERVED, build_vocab

from tests.conftest import TINY_SYNTH


class TestTiming:
    def test_whole_seconds(self):
        assert seconds_to_frames((0.0, 1.0), 200) == (0, 100)

    def test_floor_start_ceil_end(self):
        assert seconds_to_frames((0.755, 2.249), 500) == (75, 225)

    def test_end_clamped_to_utterance(self):
        assert seconds_to_frames((0.5, 3.0), 120) == (50, 120)

    def test_negative_time(self):
        with pytest.raises(ArgumentError):
            seconds_to_frames((-0.1, 1.0), 200)


class TestVocab:
    def test_frequency_order(self):
        vocab = build_vocab([["a", "b"], ["a"]])
        assert vocab.tokens == list(RESERVED) + ["a", "b"]

    def test_ties_are_lexicographic(self):
        vocab = build_vocab([["pear", "kiwi", "fig"], ["kiwi"]])
        assert vocab.tokens == list(RESERVED) + ["kiwi", "fig", "pear"]
        assert "<mask>" not in vocab

    def test_min_count(self):
        vocab = build_vocab([["a", "b"], ["a"]], min_count=2)
        assert vocab.tokens == list(RESERVED) + ["a"]
        assert vocab.index("b") == vocab.unk_index

    def test_encode_decode(self):
        vocab = build_vocab([["a", "b"]])
        ids = vocab.encode(["b", "a"], add_bos=True, add_eos=True)
        assert ids[0] == vocab.bos_index and ids[-1] == vocab.eos_index
        assert vocab.decode(ids) == ["b", "a"]

    def test_save_load(self, tmp_path):
        vocab = build_vocab([["x", "y", "y"]])
        vocab.save(tmp_path / "vocab.json")
        assert type(vocab).load(tmp_path / "vocab.json") == vocab


class TestUtterance:
    def test_alignment_count_must_match_words(self):
        with pytest.raises(CorpusValidationError, match="utt-7"):
            Utterance("utt-7", ["a", "b"], [(0.0, 0.1)], np.zeros((20, 3), dtype=np.float32))

    def test_alignment_beyond_features(self):
        with pytest.raises(AlignmentMismatchError, match="utt-8"):
            Utterance("utt-8", ["a"], [(0.0, 0.5)], np.zeros((20, 3), dtype=np.float32))

    def test_small_overhang_is_tolerated(self):
        utt = Utterance("utt-9", ["a"], [(0.0, 0.23)], np.zeros((20, 3), dtype=np.float32))
        assert utt.n_frames == 20


def test_feature_file_round_trip(tmp_path, rng):
    matrix = rng.normal(size=(7, 5)).astype(np.float32)
    write_feature_file(tmp_path / "m.bin", matrix)
    np.testing.assert_array_equal(read_feature_file(tmp_path / "m.bin"), matrix)


class TestManifest:
    def test_empty_manifest(self, tmp_path):
        (tmp_path / UTTERANCES_FILE).write_text("", encoding="utf-8")
        assert len(load_manifest(tmp_path)) == 0

    def test_missing_split(self, tmp_path):
        with pytest.raises(ManifestNotFoundError):
            load_manifest(tmp_path / "nope")

    def test_written_corpus_reads_back(self, synth, tmp_path):
        original = synth.splits["train"]
        write_manifest(original, tmp_path / "train")
        loaded = load_manifest(tmp_path / "train")
        assert [s.id for s in loaded] == [s.id for s in original]
        for a, b in zip(original, loaded):
            assert a.utterance.words == b.utterance.words
            assert a.utterance.alignments == b.utterance.alignments
            np.testing.assert_array_equal(a.utterance.features, b.utterance.features)
            assert a.visual.image_id == b.visual.image_id
            np.testing.assert_array_equal(a.visual.global_feature, b.visual.global_feature)
            np.testing.assert_allclose(a.visual.proposal_boxes, b.visual.proposal_boxes)
            np.testing.assert_array_equal(a.visual.proposal_features, b.visual.proposal_features)
            assert [e.word_indices for e in a.annotation.entries] == [e.word_indices for e in b.annotation.entries]

    def test_link_to_unknown_image(self, synth, tmp_path):
        write_manifest(synth.splits["dev"], tmp_path)
        with (tmp_path / LINKS_FILE).open("a", encoding="utf-8") as f:
            f.write(json.dumps({"utterance_id": "dev-00000", "image_id": "img-missing"}) + "\n")
        with pytest.raises(DanglingReferenceError, match="img-missing"):
            load_manifest(tmp_path)


class TestSynth:
    def test_same_seed_gives_identical_files(self, tmp_path):
        config = SynthConfig(**TINY_SYNTH)
        synthesize_corpus(config, 3, tmp_path / "a")
        synthesize_corpus(config, 3, tmp_path / "b")
        files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
        assert files_a == files_b
        for rel in files_a:
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel

    def test_different_seeds_differ(self):
        config = SynthConfig(**TINY_SYNTH)
        a = synthesize_corpus(config, 1).splits["train"]
        b = synthesize_corpus(config, 2).splits["train"]
        assert [s.utterance.words for s in a] != [s.utterance.words for s in b]

    def test_inconsistent_config(self):
        with pytest.raises(ConfigError, match="max_content_words"):
            parse_config(SynthConfig, {**TINY_SYNTH, "max_content_words": 9})

    def test_annotated_boxes_are_proposals(self, synth):
        for sample in synth.splits["train"]:
            boxes = {tuple(b) for b in sample.visual.proposal_boxes}
            assert sample.annotation.entries
            for entry in sample.annotation.entries:
                assert entry.box in boxes
                assert sample.utterance.words[entry.word_indices[0]] in synth.visual_signatures

    def test_every_split_is_written(self, synth_dir: Path):
        for split in TINY_SYNTH["splits"]:
            assert len(load_manifest(synth_dir / split)) == TINY_SYNTH["splits"][split]
        names = {c.name for c in load_category_dir(synth_dir / "categories")}
        assert names == {"nouns", "colors", "cardinals", "function_words"}
