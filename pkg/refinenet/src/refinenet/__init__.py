"""Learning-based brushstroke-crack refinement.

Trains a low-rank-adapted segmentation transformer on synthetic crack
triplets with detector-guided inputs and a masked hybrid loss, then
serves as an external refinement provider for the restoration pipeline
(invoked as ``refinenet infer {image} {mask} {out} --checkpoint ...``).
"""

from .data import RefinementSample, load_sample, split_stems, to_input_tensor
from .infer import refine_file
from .lora import LoraLinear, inject_lora, merge_lora
from .losses import LossConfig, dice_loss, guided_logits, hybrid_loss, weighting_map
from .model import RefineNet, build_model, trainable_parameters
from .train import TrainConfig, load_checkpoint, predict_mask, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "LossConfig",
    "weighting_map",
    "guided_logits",
    "dice_loss",
    "hybrid_loss",
    "LoraLinear",
    "merge_lora",
    "inject_lora",
    "RefineNet",
    "build_model",
    "trainable_parameters",
    "TrainConfig",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "predict_mask",
    "refine_file",
    "RefinementSample",
    "load_sample",
    "split_stems",
    "to_input_tensor",
]
