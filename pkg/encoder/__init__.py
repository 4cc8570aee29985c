from encoder.model import (
    EncoderParams,
    ForwardCache,
    init_params,
    forward,
    forward_with_cache,
    backward
)
from encoder.optimizer import AdamState, adam_step
from encoder.ema import TeacherState, ema_update
from encoder.checkpoint import save_checkpoint, load_checkpoint, CHECKPOINT_MAGIC

__all__ = [
    "EncoderParams",
    "ForwardCache",
    "init_params",
    "forward",
    "forward_with_cache",
    "backward",
    "AdamState",
    "adam_step",
    "TeacherState",
    "ema_update",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_MAGIC"
]
