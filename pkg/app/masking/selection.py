from __future__ import annotations

from typing import Iterable, Sequence, Union

import numpy as np

from app.core.errors import ArgumentError
from app.corpus.schemas import WordCategoryList


def select_random_mask(words: Sequence[str], p: float, rng: np.random.Generator) -> list[int]:
    """Each position independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ArgumentError(f"masking probability must be in [0, 1], got {p}")
    draws = rng.random(len(words))
    return [i for i in range(len(words)) if draws[i] < p]


def select_category_mask(words: Sequence[str], category: Union[WordCategoryList, Iterable[str]]) -> list[int]:
    """Every occurrence of every category word."""
    members = category.words if isinstance(category, WordCategoryList) else {w.lower() for w in category}
    return [i for i, w in enumerate(words) if w.lower() in members]
