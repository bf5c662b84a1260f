"""Computing a requested set of metrics over one decoded dataset."""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from app.asr.config import Variant
from app.asr.model import AsrModel
from app.core.errors import ConfigError, ManifestNotFoundError, MissingMasksError, UnsupportedVariantError
from app.core.seeding import make_rng
from app.corpus.manifest import UTTERANCES_FILE
from app.corpus.schemas import WordCategoryList
from app.evaluation.alignment import corpus_wer
from app.evaluation.decode import TRACES_FILE, DecodedSample, decode_dataset, read_traces
from app.evaluation.localization import (
    attention_rank_concentration,
    cumulative_mass,
    iou_precision_at_k,
    random_k_baseline,
)
from app.evaluation.metrics import (
    expected_visual_attention,
    grounding_rate,
    masked_words,
    rate_of_recovery,
    recovered_words,
    restrict_to_category,
    word_accuracy,
)
from app.evaluation.report import (
    REPORT_FILE,
    AttentionConcentration,
    CategorySummary,
    EvalReport,
    IouRow,
    LevelSummary,
    WerSummary,
)
from app.masking.augment import MaskedDataset, load_dataset

logger = logging.getLogger(__name__)

METRICS = ("wer", "rr", "gr", "iou", "wa")
MASK_METRICS = {"rr", "gr", "iou"}


@dataclass
class EvalOptions:
    metrics: Sequence[str] = ("wer",)
    ks: Sequence[int] = (1, 3, 5)
    gr_threshold: Optional[float] = None
    gr_threshold_source: Optional[str] = None
    recompute_threshold: bool = False
    categories: list[WordCategoryList] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        unknown = sorted(set(self.metrics) - set(METRICS))
        if unknown:
            raise ConfigError(f"unknown metrics {unknown}; choose from {', '.join(METRICS)}")


def check_options(options: EvalOptions, model: AsrModel, dataset: MaskedDataset) -> None:
    """Everything that can be rejected before decoding."""
    wanted = set(options.metrics)
    if wanted & MASK_METRICS and not dataset.is_masked:
        raise MissingMasksError(
            f"metrics {sorted(wanted & MASK_METRICS)} need a masked dataset (masks.jsonl) but {dataset.corpus.name} has none"
        )
    if "gr" in wanted:
        if not model.variant.uses_visual:
            raise UnsupportedVariantError("grounding rate needs a MAG or MAOP model")
        if options.gr_threshold is None and not options.recompute_threshold:
            raise ConfigError("grounding rate needs a threshold source: pass --gr-threshold-from <dir> or --recompute-threshold")
    if "iou" in wanted:
        if model.variant is not Variant.MAOP:
            raise UnsupportedVariantError("IoU precision needs a MAOP model")
        if not dataset.corpus.has_proposals:
            raise ConfigError(f"IoU precision needs proposal boxes; {dataset.corpus.name} has none")
        n = dataset.corpus.n_proposals
        if any(k > n or k < 1 for k in options.ks):
            raise ConfigError(f"every K must be in [1, {n}], got {list(options.ks)}")
    if "wa" in wanted and not options.categories:
        raise ConfigError("word accuracy needs category lists (--categories <dir>)")


def threshold_from(source: Path, model: Optional[AsrModel] = None) -> float:
    """E[alpha_v] from an evaluate output dir (report.json or traces.jsonl) or, with a model, a dataset dir."""
    source = Path(source)
    if source.is_file():
        return expected_visual_attention(d.trace for d in read_traces(source))
    report_path = source / REPORT_FILE
    if report_path.is_file():
        report = EvalReport.read(report_path)
        if report.e_alpha_v is not None:
            return report.e_alpha_v
    if (source / TRACES_FILE).is_file():
        return expected_visual_attention(d.trace for d in read_traces(source / TRACES_FILE))
    if model is not None and (source / UTTERANCES_FILE).is_file():
        decoded = decode_dataset(model, load_dataset(source).corpus)
        return expected_visual_attention(d.trace for d in decoded)
    raise ManifestNotFoundError(f"no report.json with e_alpha_v, traces.jsonl or dataset found in {source}")


def _level_key(probability: Optional[float]) -> str:
    return f"{int(round(probability * 100))}%"


def run_evaluation(
    model: AsrModel,
    dataset: MaskedDataset,
    options: EvalOptions,
    decoded: Optional[list[DecodedSample]] = None,
    checkpoint: str = "",
) -> tuple[EvalReport, list[DecodedSample]]:
    check_options(options, model, dataset)
    corpus = dataset.corpus
    if decoded is None:
        decoded = decode_dataset(model, corpus)
    pairs = {d.utterance_id: d.pair for d in decoded}
    traces = {d.utterance_id: d.trace for d in decoded}
    wanted = set(options.metrics)
    report = EvalReport(
        dataset=corpus.name,
        checkpoint=checkpoint,
        variant=model.variant.value,
        n_samples=len(decoded),
        metrics=[m for m in METRICS if m in wanted],
    )

    if "wer" in wanted:
        report.wer = WerSummary.from_counts(corpus_wer(pairs.values()))

    words = []
    if dataset.is_masked and wanted & MASK_METRICS:
        masks = {uid: dataset.masks[uid] for uid in pairs if uid in dataset.masks}
        words = masked_words(pairs, masks, traces)
        report.rr = rate_of_recovery(words)
        by_level: dict[str, list[str]] = defaultdict(list)
        for uid in pairs:
            probability = dataset.masks[uid].probability
            if probability is not None:
                by_level[_level_key(probability)].append(uid)
        if by_level:
            groups = {"aug": list(pairs)} | {k: by_level[k] for k in sorted(by_level, key=lambda k: int(k[:-1]))}
            for level, ids in groups.items():
                id_set = set(ids)
                report.levels[level] = LevelSummary(
                    n_samples=len(ids),
                    wer=WerSummary.from_counts(corpus_wer(pairs[uid] for uid in ids)),
                    rr=rate_of_recovery([w for w in words if w.utterance_id in id_set]),
                )

    if model.variant.uses_visual and decoded and any(len(d.trace) for d in decoded):
        report.e_alpha_v = expected_visual_attention(traces.values())

    recovered = recovered_words(words)
    if "gr" in wanted:
        if options.gr_threshold is not None:
            report.gr_threshold, report.gr_threshold_source = options.gr_threshold, options.gr_threshold_source
        else:
            logger.warning(f"Grounding threshold recomputed on {corpus.name} instead of the augmented dev set")
            report.gr_threshold, report.gr_threshold_source = report.e_alpha_v, f"recomputed on {corpus.name}"
        report.gr = grounding_rate(recovered, report.gr_threshold)

    if "iou" in wanted:
        annotations = {s.id: s.annotation for s in corpus if s.annotation is not None}
        boxes = {s.id: s.visual.proposal_boxes for s in corpus}
        for k in options.ks:
            report.iou.append(IouRow(
                k=k,
                top_k=iou_precision_at_k(recovered, annotations, boxes, k),
                random_k=random_k_baseline(recovered, annotations, boxes, k, make_rng(options.seed, f"eval/random-k/{k}")),
            ))
        curve = attention_rank_concentration(recovered)
        if curve is not None:
            report.attention = AttentionConcentration(
                mean_weight_by_rank=[float(w) for w in curve],
                top1_mass=cumulative_mass(curve, 1),
                top3_mass=cumulative_mass(curve, 3),
                n_words=len(recovered),
            )

    for category in options.categories:
        summary = CategorySummary()
        if words:
            in_category = restrict_to_category(words, category)
            summary.rr = rate_of_recovery(in_category)
            if report.gr_threshold is not None:
                summary.gr = grounding_rate(recovered_words(in_category), report.gr_threshold)
        if "wa" in wanted:
            if dataset.is_masked:
                logger.warning(f"Word accuracy on masked data ({corpus.name}); it is defined on clean audio")
            summary.word_accuracy = word_accuracy(category, pairs.values())
        report.categories[category.name] = summary

    logger.info(f"Evaluated {len(decoded)} samples of {corpus.name}: " + ", ".join(report.metrics))
    return report, decoded
