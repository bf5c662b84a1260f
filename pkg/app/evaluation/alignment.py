"""Minimum-edit-distance alignment of a reference and a hypothesis word sequence.

Among equal-cost alignments the backtrace walks left to right and prefers
match, then substitution, then deletion, then insertion.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from app.core.errors import ArgumentError


class EditOp(str, Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    DELETE = "delete"
    INSERT = "insert"


@dataclass(frozen=True)
class AlignmentStep:
    op: EditOp
    ref_index: Optional[int]
    hyp_index: Optional[int]


@dataclass
class AlignedPair:
    reference: list[str]
    hypothesis: list[str]
    steps: list[AlignmentStep] = field(default_factory=list)

    @property
    def errors(self) -> int:
        return sum(1 for s in self.steps if s.op is not EditOp.MATCH)

    def count(self, op: EditOp) -> int:
        return sum(1 for s in self.steps if s.op is op)

    def hyp_index_for(self, ref_index: int) -> Optional[int]:
        """Hypothesis position aligned to ``ref_index`` (match or substitution), None when deleted."""
        for step in self.steps:
            if step.ref_index == ref_index:
                return step.hyp_index
        raise ArgumentError(f"reference index {ref_index} outside a {len(self.reference)}-word reference")

    def is_match(self, ref_index: int) -> bool:
        return any(s.ref_index == ref_index and s.op is EditOp.MATCH for s in self.steps)


def _suffix_costs(ref: Sequence[str], hyp: Sequence[str]) -> np.ndarray:
    n, m = len(ref), len(hyp)
    cost = np.zeros((n + 1, m + 1), dtype=np.int64)
    cost[:, m] = np.arange(n, -1, -1)
    cost[n, :] = np.arange(m, -1, -1)
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            cost[i, j] = min(
                cost[i + 1, j + 1] + (ref[i] != hyp[j]),
                cost[i + 1, j] + 1,
                cost[i, j + 1] + 1,
            )
    return cost


def align(ref: Sequence[str], hyp: Sequence[str]) -> AlignedPair:
    ref, hyp = list(ref), list(hyp)
    cost = _suffix_costs(ref, hyp)
    steps: list[AlignmentStep] = []
    i = j = 0
    n, m = len(ref), len(hyp)
    while i < n or j < m:
        if i < n and j < m and ref[i] == hyp[j] and cost[i, j] == cost[i + 1, j + 1]:
            steps.append(AlignmentStep(EditOp.MATCH, i, j))
            i, j = i + 1, j + 1
        elif i < n and j < m and ref[i] != hyp[j] and cost[i, j] == cost[i + 1, j + 1] + 1:
            steps.append(AlignmentStep(EditOp.SUBSTITUTE, i, j))
            i, j = i + 1, j + 1
        elif i < n and cost[i, j] == cost[i + 1, j] + 1:
            steps.append(AlignmentStep(EditOp.DELETE, i, None))
            i += 1
        else:
            steps.append(AlignmentStep(EditOp.INSERT, None, j))
            j += 1
    return AlignedPair(ref, hyp, steps)


def wer(ref: Sequence[str], hyp: Sequence[str]) -> float:
    """Word error rate as a fraction; may exceed 1."""
    if not ref:
        raise ArgumentError("word error rate needs a non-empty reference")
    return align(ref, hyp).errors / len(ref)


@dataclass
class ErrorCounts:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    reference_words: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def percent(self) -> Optional[float]:
        if self.reference_words == 0:
            return None
        return 100.0 * self.errors / self.reference_words


def corpus_wer(pairs: Iterable[AlignedPair]) -> ErrorCounts:
    """Pooled error counts over a dataset."""
    counts = ErrorCounts()
    for pair in pairs:
        counts.substitutions += pair.count(EditOp.SUBSTITUTE)
        counts.deletions += pair.count(EditOp.DELETE)
        counts.insertions += pair.count(EditOp.INSERT)
        counts.reference_words += len(pair.reference)
    return counts
