"""Checkpoint inference honoring the mask interchange contract.

Reads an image and a detector mask, writes the refined mask as an
8-bit single-channel PNG (255 = crack) with the image's dimensions,
deterministically.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .data import _read_mask, _read_rgb
from .train import load_checkpoint, predict_mask

__all__ = ["refine_file"]


def refine_file(checkpoint, image_path, mask_path, out_path,
                gamma: float | None = None) -> np.ndarray:
    model, header = load_checkpoint(checkpoint)
    image = _read_rgb(image_path)
    detector = _read_mask(mask_path)
    if detector.shape != image.shape[:2]:
        raise ValueError(
            f"detector mask {detector.shape} does not match image {image.shape[:2]}"
        )
    if gamma is None:
        gamma = float(header.get("inference_gamma", 0.0))
    refined = predict_mask(model, image, detector, gamma)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.where(refined, 255, 0).astype(np.uint8)).save(out_path, format="PNG")
    return refined
