import itertools
from functools import lru_cache

import numpy as np
import pytest

from app.asr.config import Variant
from app.asr.trace import AttentionTrace, TraceStep
from app.core.errors import (
    ArgumentError,
    ConfigError,
    DanglingReferenceError,
    MissingMasksError,
    UnsupportedVariantError,
)
from app.corpus.schemas import AnnotationEntry, GroundTruthAnnotation, WordCategoryList
from app.evaluation import (
    EditOp,
    EvalOptions,
    EvalReport,
    Rate,
    align,
    attention_rank_concentration,
    corpus_wer,
    expected_visual_attention,
    grounding_rate,
    iou,
    iou_precision_at_k,
    random_k_baseline,
    recovery_rate,
    run_evaluation,
    threshold_from,
    wer,
    word_accuracy,
)
from app.evaluation.metrics import MaskedWord
from app.evaluation.report import format_table
from app.masking import augment
from app.masking.augment import MaskedDataset, masked_corpus
from app.masking.spans import MaskSpec


def _edit_distance(ref, hyp):
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == len(ref):
            return len(hyp) - j
        if j == len(hyp):
            return len(ref) - i
        return min(d(i + 1, j + 1) + (ref[i] != hyp[j]), d(i + 1, j) + 1, d(i, j + 1) + 1)

    return d(0, 0)


class TestAlignment:
    def test_perfect(self):
        assert wer(["a", "b", "c"], ["a", "b", "c"]) == 0.0

    def test_one_substitution(self):
        assert wer(["a", "b", "c"], ["a", "x", "c"]) == pytest.approx(1 / 3)

    def test_can_exceed_one(self):
        assert wer(["a"], ["x", "y", "z"]) == 3.0

    def test_empty_reference(self):
        with pytest.raises(ArgumentError):
            wer([], ["a"])

    def test_empty_hypothesis(self):
        assert [s.op for s in align(["a", "b"], []).steps] == [EditOp.DELETE, EditOp.DELETE]

    @pytest.mark.parametrize(
        "ref, hyp, ops",
        [
            (["a", "b"], ["c"], [EditOp.SUBSTITUTE, EditOp.DELETE]),
            (["a", "b"], ["b"], [EditOp.DELETE, EditOp.MATCH]),
            (["a"], ["b", "a"], [EditOp.INSERT, EditOp.MATCH]),
        ],
    )
    def test_tie_breaking(self, ref, hyp, ops):
        assert [s.op for s in align(ref, hyp).steps] == ops

    def test_matches_brute_force_distance(self):
        alphabet = ["a", "b", "c"]
        for n, m in itertools.product(range(1, 4), range(0, 4)):
            for ref in itertools.product(alphabet, repeat=n):
                for hyp in itertools.product(alphabet, repeat=m):
                    pair = align(ref, hyp)
                    assert pair.errors == _edit_distance(ref, hyp)
                    covered_ref = sum(1 for s in pair.steps if s.ref_index is not None)
                    covered_hyp = sum(1 for s in pair.steps if s.hyp_index is not None)
                    assert (covered_ref, covered_hyp) == (n, m)

    def test_corpus_wer_pools_counts(self):
        counts = corpus_wer([align(["a", "b"], ["a"]), align(["c", "d", "e"], ["c", "x", "e", "f"])])
        assert (counts.substitutions, counts.deletions, counts.insertions) == (1, 1, 1)
        assert counts.percent == pytest.approx(60.0)

    def test_corpus_wer_without_references(self):
        assert corpus_wer([]).percent is None


def _spec(uid, indices):
    return MaskSpec(utterance_id=uid, masked_word_indices=indices)


class TestRecovery:
    def test_repeated_word_counted_per_position(self):
        rate = recovery_rate({"u": align(["a", "b", "a"], ["a", "b"])}, {"u": _spec("u", [0, 2])})
        assert (rate.numerator, rate.denominator, rate.value) == (1, 2, 50.0)

    def test_all_recovered(self):
        assert recovery_rate({"u": align(["a", "b"], ["a", "b"])}, {"u": _spec("u", [0, 1])}).value == 100.0

    def test_none_recovered(self):
        assert recovery_rate({"u": align(["a", "b"], ["x", "y"])}, {"u": _spec("u", [0, 1])}).value == 0.0

    def test_no_masked_words_is_absent(self):
        assert recovery_rate({"u": align(["a"], ["a"])}, {"u": _spec("u", [])}).absent

    def test_mask_without_decoded_sample(self):
        with pytest.raises(DanglingReferenceError):
            recovery_rate({"u": align(["a"], ["a"])}, {"u": _spec("u", [0]), "v": _spec("v", [0])})


def _step(alpha_v=None, proposals=None):
    alpha_a = None if alpha_v is None else 1.0 - alpha_v
    weights = None if proposals is None else np.asarray(proposals, dtype=np.float64)
    return TraceStep(np.ones(1), weights, alpha_a, alpha_v)


def _word(uid="u", index=0, alpha_v=0.5, proposals=None, recovered=True):
    return MaskedWord(uid, index, "w", index if recovered else None, recovered, _step(alpha_v, proposals))


class TestVisualAttention:
    def test_mean_over_steps(self):
        traces = [AttentionTrace([_step(0.2), _step(0.4)]), AttentionTrace([_step(0.3)])]
        assert expected_visual_attention(traces) == pytest.approx(0.3)

    def test_unimodal_traces(self):
        with pytest.raises(UnsupportedVariantError):
            expected_visual_attention([AttentionTrace([_step()])])

    def test_grounding_rate(self):
        words = [_word(alpha_v=a) for a in (0.5, 0.6, 0.7, 0.1)]
        assert grounding_rate(words, 0.3).value == 75.0
        assert grounding_rate(words, 1.0).value == 0.0

    def test_threshold_is_strict(self):
        assert grounding_rate([_word(alpha_v=0.3)], 0.3).value == 0.0

    def test_grounding_without_recovered_words(self):
        assert grounding_rate([], 0.3).absent


class TestIou:
    def test_identical(self):
        assert iou((0, 0, 2, 2), (0, 0, 2, 2)) == 1.0

    def test_disjoint(self):
        assert iou((0, 0, 1, 1), (2, 2, 3, 3)) == 0.0

    def test_partial_overlap(self):
        assert iou((0, 0, 2, 2), (1, 1, 3, 3)) == pytest.approx(1 / 7)

    def test_symmetric(self, rng):
        for _ in range(20):
            a = np.sort(rng.uniform(0, 10, size=(2, 2)), axis=0).T.reshape(-1)[[0, 2, 1, 3]]
            b = np.sort(rng.uniform(0, 10, size=(2, 2)), axis=0).T.reshape(-1)[[0, 2, 1, 3]]
            assert iou(a, b) == pytest.approx(iou(b, a))

    def test_matches_unit_grid_enumeration(self, rng):
        for _ in range(1000):
            a = np.sort(rng.integers(0, 8, size=(2, 2)), axis=0).T.reshape(-1)[[0, 2, 1, 3]]
            b = np.sort(rng.integers(0, 8, size=(2, 2)), axis=0).T.reshape(-1)[[0, 2, 1, 3]]
            cells_a = {(x, y) for x in range(a[0], a[2]) for y in range(a[1], a[3])}
            cells_b = {(x, y) for x in range(b[0], b[2]) for y in range(b[1], b[3])}
            if not cells_a or not cells_b:
                continue
            assert iou(a, b) == len(cells_a & cells_b) / len(cells_a | cells_b)

    def test_degenerate_boxes(self):
        assert iou((1, 1, 1, 1), (1, 1, 1, 1)) == 1.0
        assert iou((1, 1, 1, 1), (0, 0, 2, 2)) == 0.0


BOXES = np.array([[0, 0, 10, 10], [20, 20, 30, 30], [40, 40, 50, 50], [60, 0, 70, 10]], dtype=np.float64)


def _annotations(uid="u", box=(41, 41, 50, 50)):
    return {uid: GroundTruthAnnotation(uid, [AnnotationEntry((0,), box)])}


class TestLocalization:
    def test_top1_on_the_planted_object(self):
        words = [_word(proposals=[0.1, 0.1, 0.7, 0.1])]
        assert iou_precision_at_k(words, _annotations(), {"u": BOXES}, 1).value == 100.0

    def test_attention_elsewhere(self):
        words = [_word(proposals=[0.7, 0.1, 0.1, 0.1])]
        assert iou_precision_at_k(words, _annotations(), {"u": BOXES}, 1).value == 0.0
        assert iou_precision_at_k(words, _annotations(), {"u": BOXES}, 3).value == 100.0

    def test_k_beyond_proposals(self):
        with pytest.raises(ArgumentError):
            iou_precision_at_k([_word(proposals=[0.25] * 4)], _annotations(), {"u": BOXES}, 5)

    def test_unannotated_words_are_skipped(self):
        rate = iou_precision_at_k([_word(proposals=[0.25] * 4)], {}, {"u": BOXES}, 1)
        assert rate.absent

    def test_random_with_every_proposal_matches_top_k(self, rng):
        words = [_word(proposals=[0.4, 0.3, 0.2, 0.1])]
        top = iou_precision_at_k(words, _annotations(), {"u": BOXES}, 4)
        assert random_k_baseline(words, _annotations(), {"u": BOXES}, 4, rng) == top

    def test_rank_concentration(self, rng):
        uniform = attention_rank_concentration([_word(proposals=[0.25] * 4)])
        np.testing.assert_allclose(uniform, 0.25)
        one_hot = attention_rank_concentration([_word(proposals=[0, 0, 1, 0])])
        np.testing.assert_allclose(one_hot, [1, 0, 0, 0])
        mixed = attention_rank_concentration([_word(proposals=rng.dirichlet(np.ones(4))) for _ in range(10)])
        assert np.all(np.diff(mixed) <= 1e-12)
        assert attention_rank_concentration([]) is None


class TestWordAccuracy:
    def test_share_of_matched_occurrences(self):
        pairs = [align(["red", "x"], ["red", "x"]) for _ in range(9)] + [align(["red"], ["blue"])]
        rate = word_accuracy(WordCategoryList("colors", frozenset({"red"})), pairs)
        assert (rate.numerator, rate.denominator, rate.value) == (9, 10, 90.0)

    def test_category_never_spoken(self):
        assert word_accuracy(WordCategoryList("colors", frozenset({"red"})), [align(["x"], ["x"])]).absent


def test_table_marks_empty_rates_absent():
    report = EvalReport(dataset="d", checkpoint="c", variant="MAOP", n_samples=0, metrics=["rr"], rr=Rate.of(0, 0))
    assert "absent (0/0)" in format_table(report)


def _masked_dev(synth):
    corpus = synth.splits["dev"]
    samples = augment(corpus, seed=0)
    return MaskedDataset(masked_corpus(samples, corpus), {s.sample_id: s.record() for s in samples})


class TestRunEvaluation:
    def test_unknown_metric(self):
        with pytest.raises(ConfigError):
            EvalOptions(metrics=["bleu"])

    def test_mask_metrics_need_masks(self, make_model, synth):
        with pytest.raises(MissingMasksError):
            run_evaluation(make_model(Variant.MAG), MaskedDataset(synth.splits["dev"]), EvalOptions(metrics=["rr"]))

    def test_grounding_needs_a_threshold(self, make_model, synth):
        with pytest.raises(ConfigError, match="threshold"):
            run_evaluation(make_model(Variant.MAG), _masked_dev(synth), EvalOptions(metrics=["gr"]))

    def test_iou_needs_maop(self, make_model, synth):
        with pytest.raises(UnsupportedVariantError):
            run_evaluation(make_model(Variant.MAG), _masked_dev(synth), EvalOptions(metrics=["iou"], ks=[1]))

    def test_k_larger_than_proposals(self, make_model, synth):
        with pytest.raises(ConfigError, match="K"):
            run_evaluation(make_model(Variant.MAOP), _masked_dev(synth), EvalOptions(metrics=["iou"], ks=[5]))

    def test_full_report(self, make_model, synth, tmp_path):
        dataset = _masked_dev(synth)
        options = EvalOptions(
            metrics=["wer", "rr", "gr", "iou", "wa"], ks=[1, 3], gr_threshold=0.5,
            gr_threshold_source="fixed", categories=synth.categories,
        )
        report, decoded = run_evaluation(make_model(Variant.MAOP), dataset, options)
        assert len(decoded) == len(dataset.corpus)
        assert report.rr.denominator == sum(len(m.masked_word_indices) for m in dataset.masks.values())
        assert list(report.levels) == ["aug", "0%", "20%", "40%", "60%"]
        assert report.levels["0%"].rr.absent
        assert 0.0 < report.e_alpha_v < 1.0
        assert [row.k for row in report.iou] == [1, 3]
        assert set(report.categories) == {c.name for c in synth.categories}

        report.write(tmp_path)
        assert EvalReport.read(tmp_path / "report.json") == report
        assert threshold_from(tmp_path) == pytest.approx(report.e_alpha_v)

    def test_wer_only_on_clean_data(self, make_model, synth):
        report, _ = run_evaluation(make_model(Variant.UNIMODAL), MaskedDataset(synth.splits["test"]), EvalOptions())
        assert report.wer is not None and report.rr is None and report.e_alpha_v is None
