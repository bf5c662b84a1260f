"""train and param-count subcommands."""
from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
from typing import Any

from app.asr.config import ModelConfig, Variant
from app.asr.model import AsrModel
from app.commands.common import RunConfig, merge_overrides, read_config_file
from app.core.config import parse_config
from app.core.errors import ConfigError
from app.corpus.manifest import load_manifest
from app.corpus.schemas import Corpus
from app.corpus.vocab import RESERVED, Vocabulary, build_vocab
from app.training.config import TrainConfig
from app.training.pretrained import load_pretrained
from app.training.trainer import check_corpus_for_variant, train

logger = logging.getLogger(__name__)

VARIANT_CHOICES = [v.value.lower() for v in Variant]


def add_train_parser(subparsers) -> None:
    parser = subparsers.add_parser("train", help="train one ASR variant")
    parser.add_argument("--variant", choices=VARIANT_CHOICES, required=True)
    parser.add_argument("--train", type=Path, nargs="+", required=True, help="training split directories")
    parser.add_argument("--dev", type=Path, required=True, help="dev split used for model selection")
    parser.add_argument("--config", type=Path, help="JSON config file (model and train sections)")
    parser.add_argument("--init-from", type=Path, help="checkpoint to initialize from before training")
    parser.add_argument("--seed", type=int, default=0, help="root seed")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--learning-rate", type=float)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--max-epochs", type=int)
    parser.add_argument("--patience", type=int)
    parser.add_argument("--save-every-epoch", action="store_true", default=None)
    parser.set_defaults(build_run=train_run)


def train_run(args: argparse.Namespace, argv: list[str]) -> RunConfig:
    file_values = read_config_file(args.config)
    model = merge_overrides(file_values.get("model", {}), {"variant": args.variant.upper()})
    train_values = merge_overrides(
        file_values.get("train", {}),
        {
            "learning_rate": args.learning_rate,
            "batch_size": args.batch_size,
            "max_epochs": args.max_epochs,
            "patience": args.patience,
            "save_every_epoch": args.save_every_epoch,
        },
    )
    train_values["seed"] = args.seed
    parse_config(TrainConfig, train_values)
    return RunConfig(
        command="train",
        seed=args.seed,
        out_dir=str(args.out),
        paths={
            "train": [str(p) for p in args.train],
            "dev": str(args.dev),
            "init_from": None if args.init_from is None else str(args.init_from),
        },
        model=model,
        train=train_values,
        argv=argv,
    )


def _concat(corpora: list[Corpus]) -> Corpus:
    if len(corpora) == 1:
        return corpora[0]
    return Corpus([s for c in corpora for s in c], name="+".join(c.name for c in corpora))


def infer_data_dims(overrides: dict[str, Any], corpus: Corpus) -> dict[str, Any]:
    """Fill feature and visual widths from the data unless the config fixes them."""
    resolved = dict(overrides)
    if not len(corpus):
        raise ConfigError(f"training corpus {corpus.name} is empty")
    first = next(iter(corpus))
    resolved.setdefault("feature_dim", int(first.utterance.features.shape[1]))
    if first.visual is not None:
        resolved.setdefault("visual_in_dim", int(first.visual.global_feature.shape[0]))
        if first.visual.has_proposals:
            resolved.setdefault("n_proposals", first.visual.n_proposals)
    return resolved


def run_train(run: RunConfig, out_dir: Path) -> None:
    train_corpus = _concat([load_manifest(p) for p in run.path_list("train")])
    dev_corpus = load_manifest(run.path("dev"))
    variant = Variant(run.model["variant"])
    check_corpus_for_variant(train_corpus, variant)
    check_corpus_for_variant(dev_corpus, variant)

    vocab = build_vocab(train_corpus)
    overrides = infer_data_dims(run.model, train_corpus)
    overrides["vocab_size"] = len(vocab)
    config = parse_config(ModelConfig, overrides)
    model = AsrModel(config, vocab, seed=run.seed)
    report = model.parameter_report()
    (out_dir / "params.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    logger.info(f"{config.variant.value} model with {report['total']} parameters, vocabulary of {len(vocab)}")

    init_from = run.path("init_from")
    if init_from is not None:
        pretrain = load_pretrained(init_from, model)
        (out_dir / "pretrained.json").write_text(pretrain.model_dump_json(indent=2) + "\n", encoding="utf-8")

    state = train(model, train_corpus, dev_corpus, parse_config(TrainConfig, run.train), out_dir)
    logger.info(f"Best dev WER {state.best_dev_metric:.2f} at epoch {state.best_epoch}")


def add_param_count_parser(subparsers) -> None:
    parser = subparsers.add_parser("param-count", help="report parameter counts of every variant for a configuration")
    parser.add_argument("--config", type=Path, help="JSON config file (model section)")
    parser.add_argument("--vocab-size", type=int, required=True)
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.set_defaults(build_run=param_count_run)


def param_count_run(args: argparse.Namespace, argv: list[str]) -> RunConfig:
    model = merge_overrides(read_config_file(args.config).get("model", {}), {"vocab_size": args.vocab_size})
    model.pop("variant", None)
    return RunConfig(command="param-count", seed=0, out_dir=str(args.out), model=model, argv=argv)


def run_param_count(run: RunConfig, out_dir: Path) -> None:
    size = int(run.model["vocab_size"])
    if size < len(RESERVED) + 1:
        raise ConfigError(f"--vocab-size must be at least {len(RESERVED) + 1}")
    vocab = Vocabulary(list(RESERVED) + [f"w{i}" for i in range(size - len(RESERVED))])
    counts = {}
    for variant in Variant:
        config = parse_config(ModelConfig, {**run.model, "variant": variant.value})
        counts[variant.value] = AsrModel(config, vocab).parameter_report()
        logger.info(f"{variant.value}: {counts[variant.value]['total']} parameters")
    (out_dir / "params.json").write_text(json.dumps(counts, indent=2) + "\n", encoding="utf-8")
