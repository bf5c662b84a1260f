"""End-to-end directional checks: the three variants trained on the full synthetic setup.

Hours of CPU time; run with ``pytest -m slow tests/test_directional.py``.
"""
import logging
from collections import Counter

import numpy as np
import pytest

from app.asr.config import ModelConfig, Variant
from app.asr.model import AsrModel
from app.corpus.schemas import Corpus, VisualContext, WordCategoryList
from app.corpus.synth import SynthConfig, synthesize_corpus
from app.corpus.vocab import build_vocab
from app.evaluation import EvalOptions, image_swap_probe, run_evaluation
from app.masking.augment import MaskedDataset, augment, mask_at_probability, mask_by_category, masked_corpus
from app.training import TrainConfig, train

pytestmark = pytest.mark.slow

logger = logging.getLogger(__name__)

SYNTH_SEED = 0
MASK_SEED = 1
WIDTH = 64


def _masked(samples, corpus) -> MaskedDataset:
    return MaskedDataset(masked_corpus(samples, corpus), {s.sample_id: s.record() for s in samples})


def _shows(visual: VisualContext, signature: np.ndarray) -> bool:
    # planted proposals sit within visual noise of their signature; other words are far away
    return bool(np.linalg.norm(visual.proposal_features - signature, axis=1).min() < 0.5 * np.linalg.norm(signature))


@pytest.fixture(scope="module")
def setup():
    config = SynthConfig()
    synth = synthesize_corpus(config, seed=SYNTH_SEED)
    train_split, dev, test = (synth.splits[name] for name in ("train", "dev", "test"))
    vocab = build_vocab(train_split)
    content = WordCategoryList("content", frozenset(w for words in config.content_categories().values() for w in words))
    function = WordCategoryList("function_words", frozenset(config.function_words()))
    return {
        "synth": synth,
        "vocab": vocab,
        "train": _masked(augment(train_split, seed=MASK_SEED), train_split).corpus,
        "dev": dev,
        "dev_aug": _masked(augment(dev, seed=MASK_SEED), dev),
        "test": test,
        "test_clean": MaskedDataset(test, None),
        "test_40": _masked(mask_at_probability(test, 0.4, seed=MASK_SEED, sample_id_suffix=True), test),
        "categories": [content, function],
    }


@pytest.fixture(scope="module")
def models(setup):
    vocab = setup["vocab"]
    trained = {}
    for variant in Variant:
        config = ModelConfig(
            variant=variant,
            vocab_size=len(vocab),
            enc_hidden=WIDTH,
            dec_hidden=WIDTH,
            emb_dim=WIDTH,
            attn_dim=WIDTH,
            visual_proj_dim=WIDTH,
        )
        model = AsrModel(config, vocab, seed=0)
        state = train(model, setup["train"], setup["dev"], TrainConfig(max_epochs=60, learning_rate=0.001, seed=0))
        logger.info(f"{variant.value}: best dev WER {state.best_dev_metric} at epoch {state.best_epoch}")
        trained[variant] = model
    return trained


def _report(model, dataset, **options):
    report, _ = run_evaluation(model, dataset, EvalOptions(**options))
    return report


def test_recovery_ordering_and_clean_parity(setup, models):
    recovery = {v: _report(m, setup["test_40"], metrics=("rr",)).rr.value for v, m in models.items()}
    clean = {v: _report(m, setup["test_clean"], metrics=("wer",)).wer.value for v, m in models.items()}
    logger.info(f"RR at 40%: {recovery}; clean WER: {clean}")
    assert recovery[Variant.MAOP] > recovery[Variant.MAG] > recovery[Variant.UNIMODAL]
    assert recovery[Variant.MAOP] - recovery[Variant.UNIMODAL] >= 10
    assert max(clean.values()) - min(clean.values()) <= 3


def test_content_words_are_grounded_more_than_function_words(setup, models):
    model = models[Variant.MAOP]
    threshold = _report(model, setup["dev_aug"], metrics=("wer",)).e_alpha_v
    report = _report(model, setup["test_40"], metrics=("rr", "gr"), gr_threshold=threshold, categories=setup["categories"])
    content, function = report.categories["content"].gr.value, report.categories["function_words"].gr.value
    logger.info(f"GR content {content}, function words {function} at threshold {threshold}")
    assert content - function >= 15


def test_attended_proposals_localize_masked_words(setup, models):
    report = _report(models[Variant.MAOP], setup["test_40"], metrics=("rr", "iou"), ks=(1, 3, 5))
    top = [row.top_k.value for row in report.iou]
    logger.info(f"IoU precision@1,3,5 {top}; random-1 {report.iou[0].random_k.value}")
    assert top[0] >= report.iou[0].random_k.value + 30
    assert top[0] <= top[1] <= top[2]


def test_swapping_in_the_right_image_restores_the_word(setup, models):
    model = models[Variant.MAOP]
    synth = setup["synth"]
    nouns = next(c for c in synth.categories if c.name == "nouns").words
    test, dev = setup["test"], setup["dev"]
    counts = Counter(w for s in test for w in set(s.utterance.words) if w in nouns)
    target = min(counts, key=lambda w: (-counts[w], w))

    holders = Corpus([s for s in test if target in s.utterance.words], name="swap")
    masks = mask_by_category(holders, "target", [target])
    samples = masked_corpus(masks, holders).samples
    specs = {m.sample_id: m.mask for m in masks}

    with_signature = next(s.visual for s in dev if target in s.utterance.words)
    signature = synth.visual_signatures[target]
    assert _shows(with_signature, signature)
    distractors_only = next(s.visual for s in dev if not _shows(s.visual, signature))
    right = image_swap_probe(model, samples, specs, with_signature, target).swapped.value
    wrong = image_swap_probe(model, samples, specs, distractors_only, target).swapped.value
    logger.info(f"'{target}' recovery with a matching image {right}, with distractors only {wrong}")
    assert right - wrong >= 30
