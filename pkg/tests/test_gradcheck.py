"""Backpropagated gradients of every model parameter against central finite differences."""
import numpy as np
import pytest

from app.asr.batching import collate
from app.asr.config import Variant
from app.asr.model import AsrModel
from app.corpus.vocab import RESERVED, Vocabulary
from app.numeric.functional import backward
from app.numeric.tensor import no_grad

from tests.conftest import random_samples, tiny_config

STEP = 1e-4
ENTRIES_PER_PARAMETER = 3
WORDS = [f"w{i}" for i in range(16)]


@pytest.mark.parametrize("variant", list(Variant))
def test_gradients_match_finite_differences(variant):
    vocab = Vocabulary(list(RESERVED) + WORDS)
    assert len(vocab) == 20
    model = AsrModel(tiny_config(variant, len(vocab), n_proposals=6), vocab, seed=0)
    rng = np.random.default_rng(7)
    samples = random_samples(rng, WORDS, 2, n_frames=(30, 30), n_words=(3, 5), n_proposals=6)
    batch = collate(samples, vocab, model.config)
    assert batch.features.shape[1] == 30

    model.zero_grad()
    loss, _ = model.forward_loss(batch)
    backward(loss)

    for name, param in model.named_parameters():
        analytic = np.zeros_like(param.data) if param.grad is None else param.grad.copy()
        size = min(param.data.size, ENTRIES_PER_PARAMETER)
        for flat in rng.choice(param.data.size, size=size, replace=False):
            index = np.unravel_index(flat, param.shape)
            original = param.data[index]
            with no_grad():
                param.data[index] = original + STEP
                plus = model.forward_loss(batch)[0].item()
                param.data[index] = original - STEP
                minus = model.forward_loss(batch)[0].item()
            param.data[index] = original
            numeric = (plus - minus) / (2 * STEP)
            scale = max(abs(numeric), abs(analytic[index]), 1e-5)
            assert abs(numeric - analytic[index]) / scale < 1e-3, f"{name}{index}: {analytic[index]} vs {numeric}"
