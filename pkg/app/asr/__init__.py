from app.asr.batching import Batch, collate
from app.asr.checkpoint import load_checkpoint, save_checkpoint
from app.asr.config import ModelConfig, Variant
from app.asr.encoder import EncoderStates
from app.asr.model import AsrModel
from app.asr.trace import AttentionTrace, Hypothesis, TraceStep

__all__ = [
    "AsrModel",
    "AttentionTrace",
    "Batch",
    "EncoderStates",
    "Hypothesis",
    "ModelConfig",
    "TraceStep",
    "Variant",
    "collate",
    "load_checkpoint",
    "save_checkpoint",
]
