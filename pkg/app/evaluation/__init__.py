from app.evaluation.alignment import AlignedPair, EditOp, align, corpus_wer, wer
from app.evaluation.decode import DecodedSample, decode_dataset, read_traces, write_traces
from app.evaluation.localization import (
    attention_rank_concentration,
    iou,
    iou_precision_at_k,
    random_k_baseline,
)
from app.evaluation.metrics import (
    Rate,
    expected_visual_attention,
    grounding_rate,
    masked_words,
    recovery_rate,
    word_accuracy,
)
from app.evaluation.probe import ProbeResult, image_swap_probe
from app.evaluation.report import EvalReport
from app.evaluation.suite import EvalOptions, run_evaluation, threshold_from

__all__ = [
    "AlignedPair",
    "DecodedSample",
    "EditOp",
    "EvalOptions",
    "EvalReport",
    "ProbeResult",
    "Rate",
    "align",
    "attention_rank_concentration",
    "corpus_wer",
    "decode_dataset",
    "expected_visual_attention",
    "grounding_rate",
    "image_swap_probe",
    "iou",
    "iou_precision_at_k",
    "masked_words",
    "random_k_baseline",
    "read_traces",
    "recovery_rate",
    "run_evaluation",
    "threshold_from",
    "wer",
    "word_accuracy",
    "write_traces",
]
