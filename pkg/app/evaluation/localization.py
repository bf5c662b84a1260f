"""Does proposal attention land on the annotated object? IoU Precision@K and its random baseline."""
from __future__ import annotations

from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from app.core.errors import ArgumentError, UnsupportedVariantError
from app.corpus.schemas import Box, GroundTruthAnnotation
from app.evaluation.metrics import MaskedWord, Rate

IOU_THRESHOLD = 0.5


def iou(box_a: Box, box_b: Box) -> float:
    """Intersection over union of (x1, y1, x2, y2) boxes; zero-area boxes score 0 unless identical."""
    ax1, ay1, ax2, ay2 = (float(v) for v in box_a)
    bx1, by1, bx2, by2 = (float(v) for v in box_b)
    area_a = max(0.0, ax2 - ax1) * max(0.0, ay2 - ay1)
    area_b = max(0.0, bx2 - bx1) * max(0.0, by2 - by1)
    if area_a == 0.0 or area_b == 0.0:
        return 1.0 if (ax1, ay1, ax2, ay2) == (bx1, by1, bx2, by2) else 0.0
    inter = max(0.0, min(ax2, bx2) - max(ax1, bx1)) * max(0.0, min(ay2, by2) - max(ay1, by1))
    return inter / (area_a + area_b - inter)


def _proposal_weights(word: MaskedWord) -> np.ndarray:
    if word.step is None or word.step.proposal_weights is None:
        raise UnsupportedVariantError(f"{word.utterance_id}: no proposal attention recorded (MAOP traces required)")
    return word.step.proposal_weights


def _localization_rate(
    words: Sequence[MaskedWord],
    annotations: Mapping[str, GroundTruthAnnotation],
    proposal_boxes: Mapping[str, np.ndarray],
    k: int,
    pick: Callable[[MaskedWord, int], np.ndarray],
) -> Rate:
    hits = considered = 0
    for word in words:
        annotation = annotations.get(word.utterance_id)
        gt_boxes = annotation.boxes_for(word.ref_index) if annotation is not None else []
        if not gt_boxes:
            continue
        boxes = proposal_boxes[word.utterance_id]
        if k > len(boxes):
            raise ArgumentError(f"K={k} exceeds the {len(boxes)} proposals of {word.utterance_id}")
        chosen = pick(word, k)
        best = max(iou(boxes[p], gt) for p in chosen for gt in gt_boxes)
        considered += 1
        hits += best > IOU_THRESHOLD
    return Rate.of(int(hits), considered)


def top_k_proposals(weights: np.ndarray, k: int) -> np.ndarray:
    # stable sort keeps the lower index first among equal weights
    return np.argsort(-weights, kind="stable")[:k]


def iou_precision_at_k(
    recovered: Sequence[MaskedWord],
    annotations: Mapping[str, GroundTruthAnnotation],
    proposal_boxes: Mapping[str, np.ndarray],
    k: int,
) -> Rate:
    """Share of annotated recovered words whose top-K attended proposals overlap a ground-truth box (IoU > 0.5)."""
    if k < 1:
        raise ArgumentError(f"K must be positive, got {k}")
    return _localization_rate(
        recovered, annotations, proposal_boxes, k, lambda word, kk: top_k_proposals(_proposal_weights(word), kk)
    )


def random_k_baseline(
    recovered: Sequence[MaskedWord],
    annotations: Mapping[str, GroundTruthAnnotation],
    proposal_boxes: Mapping[str, np.ndarray],
    k: int,
    rng: np.random.Generator,
) -> Rate:
    """Same procedure with K proposals drawn uniformly without replacement."""
    if k < 1:
        raise ArgumentError(f"K must be positive, got {k}")
    return _localization_rate(
        recovered, annotations, proposal_boxes, k,
        lambda word, kk: rng.choice(len(proposal_boxes[word.utterance_id]), size=kk, replace=False),
    )


def attention_rank_concentration(recovered: Sequence[MaskedWord]) -> Optional[np.ndarray]:
    """Mean proposal weight at each rank 1..N over the recovered words' decode steps; None without words."""
    rows = [np.sort(_proposal_weights(w))[::-1] for w in recovered]
    if not rows:
        return None
    return np.mean(np.stack(rows), axis=0)


def cumulative_mass(curve: np.ndarray, top: int) -> float:
    return float(curve[:top].sum())
