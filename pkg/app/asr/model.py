"""The three ASR variants behind one interface.

UNIMODAL attends over encoder states only. MAG additionally mixes in the
projected global image vector, and MAOP attends over projected object
proposals first; both combine audio and visual context through a second,
two-way attention whose weights are reported as alpha_a and alpha_v.
"""
from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np

from app.asr.batching import Batch, collate
from app.asr.config import ModelConfig
from app.asr.decoder import Decoder, DecoderState, EncoderMemory, StepWeights, VisualMemory
from app.asr.encoder import Encoder, EncoderStates
from app.asr.trace import AttentionTrace, Hypothesis, TraceStep
from app.core.errors import ConfigError, ShapeError
from app.core.seeding import make_rng
from app.corpus.schemas import CorpusSample
from app.corpus.vocab import Vocabulary
from app.numeric.functional import cross_entropy, stack
from app.numeric.nn import Module
from app.numeric.tensor import Tensor, no_grad

logger = logging.getLogger(__name__)


def _trace_step(weights: StepWeights, row: int, encoded_length: int) -> TraceStep:
    step = TraceStep(encoder_weights=weights.encoder[row, :encoded_length].astype(np.float64))
    if weights.proposals is not None:
        step.proposal_weights = weights.proposals[row].astype(np.float64)
    if weights.alphas is not None:
        step.alpha_a = float(weights.alphas[row, 0])
        step.alpha_v = float(weights.alphas[row, 1])
    return step


class AsrModel(Module):
    def __init__(self, config: ModelConfig, vocab: Vocabulary, seed: int = 0):
        if config.vocab_size != len(vocab):
            raise ConfigError(f"config vocab_size={config.vocab_size} but the vocabulary has {len(vocab)} tokens")
        self.config = config
        self.vocab = vocab
        rng = make_rng(seed, "model/init")
        self.encoder = Encoder(config, rng)
        self.decoder = Decoder(config, rng)
        self.assign_parameter_names()

    @property
    def variant(self):
        return self.config.variant

    def encode(self, features: np.ndarray) -> EncoderStates:
        """Unbatched encoder: [S, F] -> states [1, S', d_enc]."""
        features = np.asarray(features, dtype=self.config.numpy_dtype)
        if features.ndim != 2:
            raise ShapeError(f"encode expects an [S, F] matrix, got shape {features.shape}")
        return self.encoder(features[None], np.array([features.shape[0]], dtype=np.int64))

    def encode_batch(self, batch: Batch) -> EncoderStates:
        return self.encoder(batch.features, batch.lengths)

    def project_visual(self, raw: np.ndarray) -> Tensor:
        raw = np.asarray(raw)
        if raw.shape[-1] != self.config.visual_in_dim:
            raise ShapeError(f"visual features must have width {self.config.visual_in_dim}, got shape {raw.shape}")
        return self.decoder.project_visual(raw)

    def decode_step(
        self,
        y_prev: np.ndarray,
        state: DecoderState,
        memory: EncoderMemory,
        visual: Optional[VisualMemory],
    ) -> tuple[Tensor, DecoderState, StepWeights]:
        return self.decoder.step(np.asarray(y_prev, dtype=np.int64), state, memory, visual)

    def _prepare(self, batch: Batch) -> tuple[EncoderMemory, Optional[VisualMemory]]:
        memory = self.decoder.remember(self.encode_batch(batch))
        return memory, self.decoder.visual_memory(batch.visual_global, batch.proposals)

    def forward_loss(self, batch: Batch) -> tuple[Tensor, list[AttentionTrace]]:
        """Teacher-forced mean cross-entropy over non-pad target positions."""
        memory, visual = self._prepare(batch)
        state = self.decoder.initial_state(len(batch))
        step_logits, step_weights = [], []
        for t in range(batch.inputs.shape[1]):
            logits, state, weights = self.decode_step(batch.inputs[:, t], state, memory, visual)
            step_logits.append(logits)
            step_weights.append(weights)
        loss = cross_entropy(stack(step_logits, axis=1), batch.targets, batch.target_mask)
        lengths = memory.states.lengths
        traces = [
            AttentionTrace([
                _trace_step(step_weights[t], row, lengths[row])
                for t in range(batch.inputs.shape[1]) if batch.target_mask[row, t]
            ])
            for row in range(len(batch))
        ]
        return loss, traces

    def _blocked_logits(self, logits: np.ndarray) -> np.ndarray:
        logits = logits.astype(np.float64, copy=True)
        logits[..., [self.vocab.pad_index, self.vocab.bos_index]] = -np.inf
        return logits

    def greedy_decode_batch(self, batch: Batch, max_lens: Sequence[int]) -> list[Hypothesis]:
        """Argmax decoding from bos until eos or each row's cap."""
        max_lens = [int(m) for m in max_lens]
        tokens: list[list[int]] = [[] for _ in range(len(batch))]
        steps: list[list[TraceStep]] = [[] for _ in range(len(batch))]
        terminated = [False] * len(batch)
        done = [m <= 0 for m in max_lens]
        with no_grad():
            memory, visual = self._prepare(batch)
            state = self.decoder.initial_state(len(batch))
            y_prev = np.full(len(batch), self.vocab.bos_index, dtype=np.int64)
            t = 0
            while not all(done):
                logits, state, weights = self.decode_step(y_prev, state, memory, visual)
                y_prev = self._blocked_logits(logits.data).argmax(axis=-1)
                for row in range(len(batch)):
                    if done[row]:
                        continue
                    steps[row].append(_trace_step(weights, row, memory.states.lengths[row]))
                    if y_prev[row] == self.vocab.eos_index:
                        terminated[row] = done[row] = True
                        continue
                    tokens[row].append(int(y_prev[row]))
                    done[row] = t + 1 >= max_lens[row]
                t += 1
        return [
            Hypothesis(self.vocab.decode(tokens[row]), AttentionTrace(steps[row]), terminated[row])
            for row in range(len(batch))
        ]

    def greedy_decode(self, sample: CorpusSample, max_len: Optional[int] = None) -> Hypothesis:
        if max_len is None:
            max_len = self.config.decode_cap(len(sample.utterance.words))
        return self.greedy_decode_batch(collate([sample], self.vocab, self.config), [max_len])[0]

    def beam_decode(self, sample: CorpusSample, beam_width: int, max_len: Optional[int] = None) -> Hypothesis:
        """Beam search ranked by summed log-probability; width 1 reproduces greedy decoding."""
        if max_len is None:
            max_len = self.config.decode_cap(len(sample.utterance.words))
        batch = collate([sample], self.vocab, self.config)
        finished: list[tuple[float, list[int], list[TraceStep], bool]] = []
        with no_grad():
            memory, visual = self._prepare(batch)
            state = self.decoder.initial_state(1)
            scores = np.zeros(1)
            beams: list[tuple[list[int], list[TraceStep]]] = [([], [])]
            y_prev = np.array([self.vocab.bos_index], dtype=np.int64)
            for _ in range(max_len):
                rows = np.zeros(len(beams), dtype=np.int64)
                logits, state, weights = self.decode_step(
                    y_prev, state, memory.select(rows), None if visual is None else visual.select(rows)
                )
                log_probs = self._blocked_logits(logits.data)
                log_probs -= np.logaddexp.reduce(log_probs, axis=-1, keepdims=True)
                candidates = scores[:, None] + log_probs
                order = np.argsort(-candidates, axis=None, kind="stable")[: beam_width]
                parents, next_tokens, next_scores, next_beams = [], [], [], []
                for flat in order:
                    parent, token = divmod(int(flat), candidates.shape[1])
                    trace = beams[parent][1] + [_trace_step(weights, parent, memory.states.lengths[0])]
                    if token == self.vocab.eos_index:
                        finished.append((float(candidates[parent, token]), beams[parent][0], trace, True))
                    else:
                        parents.append(parent)
                        next_tokens.append(token)
                        next_scores.append(float(candidates[parent, token]))
                        next_beams.append((beams[parent][0] + [token], trace))
                if not next_beams or len(finished) >= beam_width:
                    beams = []
                    break
                state = state.select(np.array(parents))
                scores = np.array(next_scores)
                beams = next_beams
                y_prev = np.array(next_tokens, dtype=np.int64)
        pool = finished + [(float(s), tokens, trace, False) for s, (tokens, trace) in zip(scores, beams)]
        if not pool:
            return Hypothesis([], AttentionTrace(), False)
        score, tokens, trace, terminated = max(pool, key=lambda item: item[0])
        return Hypothesis(self.vocab.decode(tokens), AttentionTrace(trace), terminated, score)

    def transcribe(self, samples: Sequence[CorpusSample], batch_size: int = 32) -> list[Hypothesis]:
        """Decode ``samples`` in order with the configured beam width."""
        if self.config.beam_width > 1:
            return [self.beam_decode(s, self.config.beam_width) for s in samples]
        hypotheses: list[Hypothesis] = []
        for start in range(0, len(samples), batch_size):
            chunk = list(samples[start : start + batch_size])
            batch = collate(chunk, self.vocab, self.config)
            caps = [self.config.decode_cap(len(s.utterance.words)) for s in chunk]
            hypotheses.extend(self.greedy_decode_batch(batch, caps))
        return hypotheses

    def parameter_report(self) -> dict[str, int]:
        """Parameter totals grouped by top-level component."""
        report: dict[str, int] = {}
        for name, param in self.named_parameters():
            group = ".".join(name.split(".")[:2])
            report[group] = report.get(group, 0) + int(param.data.size)
        report["total"] = self.parameter_count()
        return report
