from __future__ import annotations

from typing import Sequence

import numpy as np

from app.core.errors import ArgumentError
from app.core.seeding import make_rng


def bucket_batches(lengths: Sequence[int], batch_size: int, rng: np.random.Generator) -> list[list[int]]:
    """Shuffle, group similar source lengths into batches, then shuffle the batch order.

    The stable sort keeps the shuffled order among equal lengths, so the
    result depends only on ``lengths`` and the generator state.
    """
    if batch_size < 1:
        raise ArgumentError(f"batch_size must be positive, got {batch_size}")
    shuffled = rng.permutation(len(lengths))
    by_length = sorted(shuffled.tolist(), key=lambda i: lengths[i])
    batches = [by_length[i : i + batch_size] for i in range(0, len(by_length), batch_size)]
    order = rng.permutation(len(batches))
    return [batches[i] for i in order]


def epoch_batches(lengths: Sequence[int], batch_size: int, seed: int, epoch: int) -> list[list[int]]:
    return bucket_batches(lengths, batch_size, make_rng(seed, f"train/epoch/{epoch}"))
