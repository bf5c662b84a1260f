"""Feature matrix files: 8-byte header (rows, cols as little-endian uint32) then row-major float32."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from app.core.errors import MalformedRecordError, ManifestNotFoundError

_HEADER = np.dtype("<u4")
_VALUES = np.dtype("<f4")


def write_feature_file(path: Path, matrix: np.ndarray) -> None:
    matrix = np.atleast_2d(np.asarray(matrix))
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array(matrix.shape, dtype=_HEADER).tobytes()
    path.write_bytes(header + np.ascontiguousarray(matrix, dtype=_VALUES).tobytes())


def read_feature_file(path: Path) -> np.ndarray:
    if not path.is_file():
        raise ManifestNotFoundError(f"feature file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 8:
        raise MalformedRecordError(f"feature file {path} is shorter than its header")
    rows, cols = np.frombuffer(raw[:8], dtype=_HEADER)
    expected = 8 + int(rows) * int(cols) * _VALUES.itemsize
    if len(raw) != expected:
        raise MalformedRecordError(f"feature file {path}: header says {rows}x{cols} but holds {len(raw) - 8} bytes of values")
    return np.frombuffer(raw[8:], dtype=_VALUES).reshape(int(rows), int(cols)).astype(np.float32)
