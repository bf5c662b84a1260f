"""Decoding a dataset once and keeping hypotheses, alignments and traces together."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, Field

from app.asr.model import AsrModel
from app.asr.trace import AttentionTrace, Hypothesis
from app.core.errors import ManifestNotFoundError
from app.corpus.manifest import read_jsonl, write_jsonl
from app.corpus.schemas import Corpus
from app.evaluation.alignment import AlignedPair, align

logger = logging.getLogger(__name__)

TRACES_FILE = "traces.jsonl"


@dataclass
class DecodedSample:
    utterance_id: str
    hypothesis: Hypothesis
    pair: AlignedPair

    @property
    def trace(self) -> AttentionTrace:
        return self.hypothesis.trace


class TraceRecord(BaseModel):
    utterance_id: str
    reference: list[str]
    hypothesis: list[str]
    terminated: bool
    steps: list[dict[str, Any]] = Field(default_factory=list, description="Per decode step attention weights")
    top_proposals: Optional[list[int]] = Field(None, description="Most attended proposal per step (MAOP)")

    @classmethod
    def from_decoded(cls, decoded: DecodedSample) -> "TraceRecord":
        trace = decoded.trace
        top = None
        if trace.has_proposals:
            top = [int(np.argmax(step.proposal_weights)) for step in trace.steps]
        return cls(
            utterance_id=decoded.utterance_id,
            reference=decoded.pair.reference,
            hypothesis=decoded.hypothesis.words,
            terminated=decoded.hypothesis.terminated,
            steps=trace.to_list(),
            top_proposals=top,
        )

    def to_decoded(self) -> DecodedSample:
        hypothesis = Hypothesis(list(self.hypothesis), AttentionTrace.from_list(self.steps), self.terminated)
        return DecodedSample(self.utterance_id, hypothesis, align(self.reference, self.hypothesis))


def decode_dataset(model: AsrModel, corpus: Corpus, batch_size: int = 32) -> list[DecodedSample]:
    samples = list(corpus)
    hypotheses = model.transcribe(samples, batch_size=batch_size)
    decoded = [
        DecodedSample(s.id, h, align(s.utterance.words, h.words)) for s, h in zip(samples, hypotheses)
    ]
    logger.debug(f"Decoded {len(decoded)} samples of {corpus.name or 'corpus'}")
    return decoded


def write_traces(path: Path, decoded: list[DecodedSample]) -> None:
    write_jsonl(path, [TraceRecord.from_decoded(d) for d in decoded])
    logger.info(f"Wrote {len(decoded)} attention traces to {path}")


def read_traces(path: Path) -> list[DecodedSample]:
    if not path.is_file():
        raise ManifestNotFoundError(f"trace dump not found: {path}")
    return [record.to_decoded() for record in read_jsonl(path, TraceRecord)]
