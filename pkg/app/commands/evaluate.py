"""evaluate and probe-swap subcommands."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Optional

from app.asr.checkpoint import load_checkpoint
from app.asr.model import AsrModel
from app.commands.common import RunConfig
from app.core.errors import ConfigError, LookupFailedError, MissingMasksError
from app.corpus.categories import load_category_dir
from app.corpus.manifest import load_manifest
from app.corpus.schemas import VisualContext
from app.evaluation.decode import TRACES_FILE, read_traces, write_traces
from app.evaluation.probe import image_swap_probe
from app.evaluation.suite import METRICS, EvalOptions, run_evaluation, threshold_from
from app.masking.augment import load_dataset

logger = logging.getLogger(__name__)


def _csv(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _ks(value: str) -> list[int]:
    try:
        return [int(v) for v in _csv(value)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--k expects comma-separated integers, got {value!r}")


def add_evaluate_parser(subparsers) -> None:
    parser = subparsers.add_parser("evaluate", help="decode a dataset and compute metrics")
    parser.add_argument("--checkpoint", type=Path, required=True)
    parser.add_argument("--dataset", type=Path, required=True, help="clean or masked dataset directory")
    parser.add_argument("--metrics", type=_csv, default=["wer"], help=f"comma-separated subset of {','.join(METRICS)}")
    parser.add_argument("--k", type=_ks, default=[1, 3, 5], help="K values for IoU precision")
    threshold = parser.add_mutually_exclusive_group()
    threshold.add_argument("--gr-threshold-from", type=Path, help="evaluate output or dataset dir giving E[alpha_v]")
    threshold.add_argument("--recompute-threshold", action="store_true", help="use E[alpha_v] of this dataset")
    parser.add_argument("--categories", type=Path, help="directory of category word lists")
    parser.add_argument("--traces", type=Path, help="traces.jsonl to score instead of decoding")
    parser.add_argument("--beam-width", type=int, help="decode with beam search of this width")
    parser.add_argument("--seed", type=int, default=0, help="root seed (random-K baseline)")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.set_defaults(build_run=evaluate_run)


def evaluate_run(args: argparse.Namespace, argv: list[str]) -> RunConfig:
    unknown = sorted(set(args.metrics) - set(METRICS))
    if unknown:
        raise ConfigError(f"unknown metrics {unknown}; choose from {', '.join(METRICS)}")
    if args.beam_width is not None and args.beam_width < 1:
        raise ConfigError(f"--beam-width must be positive, got {args.beam_width}")
    return RunConfig(
        command="evaluate",
        seed=args.seed,
        out_dir=str(args.out),
        paths={
            "checkpoint": str(args.checkpoint),
            "dataset": str(args.dataset),
            "gr_threshold_from": None if args.gr_threshold_from is None else str(args.gr_threshold_from),
            "categories": None if args.categories is None else str(args.categories),
            "traces": None if args.traces is None else str(args.traces),
        },
        options={
            "metrics": args.metrics,
            "k": args.k,
            "recompute_threshold": args.recompute_threshold,
            "beam_width": args.beam_width,
        },
        argv=argv,
    )


def load_model(checkpoint: Path, beam_width: Optional[int] = None) -> AsrModel:
    model = load_checkpoint(checkpoint)
    if beam_width is not None:
        model.config = model.config.model_copy(update={"beam_width": beam_width})
    return model


def run_evaluate(run: RunConfig, out_dir: Path) -> None:
    model = load_model(run.path("checkpoint"), run.options.get("beam_width"))
    dataset = load_dataset(run.path("dataset"))
    categories = load_category_dir(run.path("categories")) if run.path("categories") else []
    threshold, source = None, None
    if run.path("gr_threshold_from") is not None and "gr" in run.options["metrics"]:
        source = str(run.path("gr_threshold_from"))
        threshold = threshold_from(run.path("gr_threshold_from"), model)
    options = EvalOptions(
        metrics=run.options["metrics"],
        ks=run.options["k"],
        gr_threshold=threshold,
        gr_threshold_source=source,
        recompute_threshold=run.options.get("recompute_threshold", False),
        categories=categories,
        seed=run.seed,
    )
    decoded = read_traces(run.path("traces")) if run.path("traces") else None
    report, decoded = run_evaluation(model, dataset, options, decoded, checkpoint=str(run.path("checkpoint")))
    report.write(out_dir)
    write_traces(out_dir / TRACES_FILE, decoded)


def add_probe_parser(subparsers) -> None:
    parser = subparsers.add_parser("probe-swap", help="re-decode masked samples with another image as context")
    parser.add_argument("--checkpoint", type=Path, required=True)
    parser.add_argument("--dataset", type=Path, required=True, help="masked dataset directory")
    parser.add_argument("--samples", type=Path, help="file of sample ids, one per line (default: every sample)")
    parser.add_argument("--image-id", required=True, help="image to use as everybody's visual context")
    parser.add_argument("--image-source", type=Path, help="corpus directory holding the image (default: --dataset)")
    parser.add_argument("--target-word", help="only count masked occurrences of this word")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, required=True)
    parser.set_defaults(build_run=probe_run)


def probe_run(args: argparse.Namespace, argv: list[str]) -> RunConfig:
    return RunConfig(
        command="probe-swap",
        seed=args.seed,
        out_dir=str(args.out),
        paths={
            "checkpoint": str(args.checkpoint),
            "dataset": str(args.dataset),
            "samples": None if args.samples is None else str(args.samples),
            "image_source": None if args.image_source is None else str(args.image_source),
        },
        options={"image_id": args.image_id, "target_word": args.target_word},
        argv=argv,
    )


def find_image(image_id: str, *sources) -> VisualContext:
    for corpus in sources:
        image = corpus.images().get(image_id)
        if image is not None:
            return image
    raise LookupFailedError(f"image {image_id!r} not found in {', '.join(c.name for c in sources)}")


def run_probe(run: RunConfig, out_dir: Path) -> None:
    model = load_model(run.path("checkpoint"))
    dataset = load_dataset(run.path("dataset"))
    if not dataset.is_masked:
        raise MissingMasksError(f"the image-swap probe needs a masked dataset; {dataset.corpus.name} has no masks.jsonl")
    sources = [dataset.corpus]
    if run.path("image_source") is not None:
        sources.insert(0, load_manifest(run.path("image_source")))
    substitute = find_image(run.options["image_id"], *sources)

    if run.path("samples") is not None:
        path = run.path("samples")
        if not path.is_file():
            raise ConfigError(f"sample list not found: {path}")
        ids = [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    else:
        ids = [s.id for s in dataset.corpus]
    missing = [i for i in ids if i not in dataset.corpus]
    if missing:
        raise LookupFailedError(f"{len(missing)} sample ids not in {dataset.corpus.name}, e.g. {missing[0]}")
    samples = [dataset.corpus[i] for i in ids]
    result = image_swap_probe(model, samples, dataset.masks, substitute, run.options.get("target_word"))
    (out_dir / "probe.json").write_text(result.model_dump_json(indent=2) + "\n", encoding="utf-8")
