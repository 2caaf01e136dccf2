"""Minimal dense-tensor math with reverse-mode gradients, plus the U-Net."""

from .tensor import Tensor
from .adam import AdamState, adam_step
from .gradcheck import finite_diff_grad, grad_close
from .unet import (
    DESK_FILTERS,
    FULL_FILTERS,
    PRESETS,
    ModelConfig,
    ModelState,
    build_unet,
    forward,
    forward_batch,
    predict_cell_flat,
    predict_proba,
)
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tensor",
    "AdamState",
    "adam_step",
    "finite_diff_grad",
    "grad_close",
    "ModelConfig",
    "ModelState",
    "build_unet",
    "forward",
    "forward_batch",
    "predict_cell_flat",
    "predict_proba",
    "DESK_FILTERS",
    "FULL_FILTERS",
    "PRESETS",
    "load_checkpoint",
    "save_checkpoint",
]
