import math

from app.core.errors import ArgumentError
from app.corpus.schemas import FRAME_HOP_SEC


def _snap(value: float) -> float:
    # 0.07 / 0.01 is 7.000000000000001 in binary floating point
    nearest = round(value)
    return float(nearest) if abs(value - nearest) < 1e-6 else value


def seconds_to_frames(span: tuple[float, float], n_frames: int) -> tuple[int, int]:
    """floor(start / hop), min(ceil(end / hop), n_frames)."""
    start, end = span
    if start < 0 or end < 0:
        raise ArgumentError(f"negative time in span ({start}, {end})")
    if start > end:
        raise ArgumentError(f"span starts after it ends: ({start}, {end})")
    end_frame = min(math.ceil(_snap(end / FRAME_HOP_SEC)), n_frames)
    start_frame = min(math.floor(_snap(start / FRAME_HOP_SEC)), end_frame)
    return start_frame, end_frame


def frames_to_seconds(frame: int) -> float:
    return round(frame * FRAME_HOP_SEC, 2)
