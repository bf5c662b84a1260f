from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence, Union

from app.core.errors import CorpusValidationError
from app.corpus.schemas import Corpus

PAD = "<pad>"
BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
RESERVED = (PAD, BOS, EOS, UNK)


class Vocabulary:
    """Dense word <-> index bijection with the four reserved tokens at 0..3."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[:4]) != RESERVED:
            raise CorpusValidationError(f"vocabulary must start with {RESERVED}")
        if len(set(tokens)) != len(tokens):
            raise CorpusValidationError("vocabulary tokens are not unique")
        self._tokens = tokens
        self._index = {t: i for i, t in enumerate(tokens)}

    pad_index = 0
    bos_index = 1
    eos_index = 2
    unk_index = 3

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    def index(self, word: str) -> int:
        return self._index.get(word, self.unk_index)

    def word(self, index: int) -> str:
        return self._tokens[index]

    def encode(self, words: Sequence[str], add_bos: bool = False, add_eos: bool = False) -> list[int]:
        ids = [self.index(w) for w in words]
        if add_bos:
            ids = [self.bos_index] + ids
        if add_eos:
            ids = ids + [self.eos_index]
        return ids

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self._tokens[i] for i in ids if i not in (self.pad_index, self.bos_index, self.eos_index)]

    def save(self, path: Path) -> None:
        path.write_text(json.dumps(self._tokens, indent=0) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "Vocabulary":
        return cls(json.loads(path.read_text(encoding="utf-8")))


def build_vocab(corpus: Union[Corpus, Iterable[Sequence[str]]], min_count: int = 1) -> Vocabulary:
    """Words with count >= min_count, most frequent first, ties lexicographic."""
    if min_count < 1:
        raise CorpusValidationError(f"min_count must be >= 1, got {min_count}")
    transcripts = (s.utterance.words for s in corpus) if isinstance(corpus, Corpus) else corpus
    counts = Counter(w for words in transcripts for w in words)
    kept = sorted((w for w, c in counts.items() if c >= min_count and w not in RESERVED), key=lambda w: (-counts[w], w))
    return Vocabulary(list(RESERVED) + kept)
