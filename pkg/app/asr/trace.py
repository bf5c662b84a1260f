"""Per-step attention records kept alongside every hypothesis."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np


@dataclass
class TraceStep:
    encoder_weights: np.ndarray  # [S']
    proposal_weights: Optional[np.ndarray] = None  # [N], MAOP only
    alpha_a: Optional[float] = None
    alpha_v: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "encoder_weights": [float(w) for w in self.encoder_weights],
            "proposal_weights": None if self.proposal_weights is None else [float(w) for w in self.proposal_weights],
            "alpha_a": self.alpha_a,
            "alpha_v": self.alpha_v,
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "TraceStep":
        proposals = payload.get("proposal_weights")
        return cls(
            encoder_weights=np.asarray(payload["encoder_weights"], dtype=np.float64),
            proposal_weights=None if proposals is None else np.asarray(proposals, dtype=np.float64),
            alpha_a=payload.get("alpha_a"),
            alpha_v=payload.get("alpha_v"),
        )


@dataclass
class AttentionTrace:
    steps: list[TraceStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def __getitem__(self, index: int) -> TraceStep:
        return self.steps[index]

    @property
    def has_alphas(self) -> bool:
        return bool(self.steps) and self.steps[0].alpha_v is not None

    @property
    def has_proposals(self) -> bool:
        return bool(self.steps) and self.steps[0].proposal_weights is not None

    def alpha_v(self) -> np.ndarray:
        return np.array([s.alpha_v for s in self.steps], dtype=np.float64)

    def to_list(self) -> list[dict[str, Any]]:
        return [s.to_dict() for s in self.steps]

    @classmethod
    def from_list(cls, payload: list[dict[str, Any]]) -> "AttentionTrace":
        return cls([TraceStep.from_dict(step) for step in payload])


@dataclass
class Hypothesis:
    words: list[str]
    trace: AttentionTrace
    terminated: bool
    score: float = 0.0

    def aligned_trace_step(self, hyp_position: int) -> TraceStep:
        """Trace step that emitted hypothesis word ``hyp_position``."""
        return self.trace[hyp_position]
