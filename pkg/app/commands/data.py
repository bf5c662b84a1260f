"""synth-data and mask subcommands."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path

from app.commands.common import RunConfig, read_config_file
from app.core.config import parse_config
from app.core.errors import ConfigError
from app.corpus.categories import read_category_words
from app.corpus.manifest import load_manifest
from app.corpus.synth import SynthConfig, synthesize_corpus
from app.masking.augment import augment, mask_at_probability, mask_by_category, write_masked_dataset

logger = logging.getLogger(__name__)


def add_synth_parser(subparsers) -> None:
    parser = subparsers.add_parser("synth-data", help="generate a deterministic synthetic corpus")
    parser.add_argument("--config", type=Path, help="JSON config file (synth section)")
    parser.add_argument("--seed", type=int, default=0, help="root seed")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--train", dest="n_train", type=int, help="utterances in the train split")
    parser.add_argument("--dev", dest="n_dev", type=int, help="utterances in the dev split")
    parser.add_argument("--test", dest="n_test", type=int, help="utterances in the test split")
    parser.set_defaults(build_run=synth_run)


def synth_run(args: argparse.Namespace, argv: list[str]) -> RunConfig:
    file_values = read_config_file(args.config).get("synth", {})
    synth = dict(file_values)
    splits = dict(synth.get("splits") or SynthConfig().splits)
    for split, count in (("train", args.n_train), ("dev", args.n_dev), ("test", args.n_test)):
        if count is not None:
            splits[split] = count
    synth["splits"] = splits
    parse_config(SynthConfig, synth)
    return RunConfig(command="synth-data", seed=args.seed, out_dir=str(args.out), synth=synth, argv=argv)


def run_synth(run: RunConfig, out_dir: Path) -> None:
    config = parse_config(SynthConfig, run.synth)
    synthesize_corpus(config, run.seed, out_dir)


def add_mask_parser(subparsers) -> None:
    parser = subparsers.add_parser("mask", help="build a masked or augmented dataset from a corpus split")
    parser.add_argument("--corpus", type=Path, required=True, help="corpus split directory")
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--augment", action="store_true", help="four copies masked at 0/20/40/60%%")
    mode.add_argument("--probability", type=float, help="mask each word with this probability")
    mode.add_argument("--category", type=Path, help="mask every occurrence of the words in this file")
    parser.add_argument("--no-expand", action="store_true", help="mask the aligned span without 25%% expansion")
    parser.add_argument("--seed", type=int, default=0, help="root seed")
    parser.add_argument("--out", type=Path, required=True, help="output directory for the masked dataset")
    parser.set_defaults(build_run=mask_run)


def mask_run(args: argparse.Namespace, argv: list[str]) -> RunConfig:
    if args.probability is not None and not 0.0 <= args.probability <= 1.0:
        raise ConfigError(f"--probability must be in [0, 1], got {args.probability}")
    mode = "augment" if args.augment else "probability" if args.probability is not None else "category"
    return RunConfig(
        command="mask",
        seed=args.seed,
        out_dir=str(args.out),
        paths={"corpus": str(args.corpus), "category": None if args.category is None else str(args.category)},
        options={"mode": mode, "probability": args.probability, "expand": not args.no_expand},
        argv=argv,
    )


def run_mask(run: RunConfig, out_dir: Path) -> None:
    corpus = load_manifest(run.path("corpus"))
    mode, expand = run.options["mode"], run.options.get("expand", True)
    if mode == "augment":
        samples = augment(corpus, run.seed, expand=expand)
    elif mode == "probability":
        samples = mask_at_probability(corpus, run.options["probability"], run.seed, expand=expand)
    elif mode == "category":
        category_path = run.path("category")
        words = read_category_words(category_path)
        if not words:
            logger.warning(f"Category file {category_path} is empty; nothing will be masked")
        samples = mask_by_category(corpus, category_path.stem, words, expand=expand)
    else:
        raise ConfigError(f"unknown masking mode {mode!r}")
    write_masked_dataset(samples, corpus, out_dir)
