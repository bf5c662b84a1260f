import struct

import numpy as np
import pytest

from app.asr.checkpoint import (
    CONFIG_FILE,
    PARAMS_FILE,
    VOCAB_FILE,
    load_checkpoint,
    read_params,
    save_checkpoint,
    write_params,
)
from app.asr.config import Variant
from app.core.errors import IncompatibleCheckpointError, MalformedRecordError, ManifestNotFoundError
from app.corpus.synth import SynthConfig, synthesize_corpus
from app.training import evaluate_dev

from tests.conftest import TINY_SYNTH, tiny_config


def test_params_layout(tmp_path):
    write_params(tmp_path / PARAMS_FILE, {"w": np.array([[1.0, 2.0, 3.0]])})
    raw = (tmp_path / PARAMS_FILE).read_bytes()
    assert struct.unpack("<I", raw[:4]) == (1,)
    assert raw[4:5] == b"w"
    assert struct.unpack("<III", raw[5:17]) == (2, 1, 3)
    assert struct.unpack("<3f", raw[17:]) == (1.0, 2.0, 3.0)


def test_truncated_params(tmp_path):
    write_params(tmp_path / PARAMS_FILE, {"w": np.ones((2, 2))})
    path = tmp_path / PARAMS_FILE
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(MalformedRecordError):
        read_params(path)


def test_round_trip(make_model, tmp_path):
    model = make_model(Variant.MAOP, dtype="float32")
    save_checkpoint(model, tmp_path / "ckpt")
    for name in (PARAMS_FILE, CONFIG_FILE, VOCAB_FILE):
        assert (tmp_path / "ckpt" / name).is_file()

    loaded = load_checkpoint(tmp_path / "ckpt")
    assert loaded.config == model.config
    assert loaded.vocab == model.vocab
    for (name, a), (_, b) in zip(model.named_parameters(), loaded.named_parameters()):
        np.testing.assert_array_equal(a.data, b.data, err_msg=name)
    dev = synthesize_corpus(SynthConfig(**{**TINY_SYNTH, "splits": {"dev": 50}}), seed=0).splits["dev"]
    samples = list(dev)
    assert len(samples) == 50
    assert [h.words for h in loaded.transcribe(samples)] == [h.words for h in model.transcribe(samples)]
    assert evaluate_dev(loaded, dev) == evaluate_dev(model, dev)


def test_variant_mismatch(make_model, tmp_path):
    model = make_model(Variant.MAG)
    save_checkpoint(model, tmp_path / "ckpt")
    with pytest.raises(IncompatibleCheckpointError, match="MAG"):
        load_checkpoint(tmp_path / "ckpt", expected=tiny_config(Variant.MAOP, model.config.vocab_size))


def test_hidden_size_mismatch(make_model, tmp_path):
    model = make_model(Variant.UNIMODAL)
    save_checkpoint(model, tmp_path / "ckpt")
    wanted = tiny_config(Variant.UNIMODAL, model.config.vocab_size, enc_hidden=10)
    with pytest.raises(IncompatibleCheckpointError):
        load_checkpoint(tmp_path / "ckpt", expected=wanted)


def test_missing_checkpoint(tmp_path):
    with pytest.raises(ManifestNotFoundError):
        load_checkpoint(tmp_path / "absent")
