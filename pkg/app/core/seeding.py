import hashlib

import numpy as np


def derive_seed(root_seed: int, purpose: str) -> int:
    """Stable 63-bit seed for one consumer of randomness.

    The same (root_seed, purpose) pair yields the same seed on every platform
    and interpreter run, unlike ``hash()``.
    """
    digest = hashlib.sha256(f"{root_seed}:{purpose}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def make_rng(root_seed: int, purpose: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root_seed, purpose))
