"""Dataset access for detector-guided refinement training.

Works directly on the dataset directory layout the generation CLI
writes (``clean/``, ``masks/``, ``damaged/`` plus a detector-mask
directory precomputed by the detection CLI):

    <root>/damaged/<stem>.png    model input (RGB)
    <root>/masks/<stem>.png      ground-truth crack mask (0/255)
    <detector>/<stem>_mask.png   detector candidate mask (0/255)

Inputs are four channels: RGB normalized with ImageNet statistics plus
the raw {0,1} detector channel. Augmentations are the usual spatial
set: random crops, horizontal/vertical flips, quarter rotations, and a
random scale jitter before cropping.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

__all__ = [
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "RefinementSample",
    "load_sample",
    "discover_stems",
    "split_stems",
    "to_input_tensor",
    "random_training_crop",
]

IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


@dataclass
class RefinementSample:
    stem: str
    image: np.ndarray          # (H, W, 3) uint8
    detector: np.ndarray       # (H, W) bool
    target: np.ndarray | None  # (H, W) bool, absent at inference


def _read_rgb(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def _read_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    return arr > 127


def _detector_path(detector_dir: Path, stem: str) -> Path:
    for name in (f"{stem}.png", f"{stem}_mask.png"):
        candidate = detector_dir / name
        if candidate.is_file():
            return candidate
    raise FileNotFoundError(f"no detector mask for {stem!r} under {detector_dir}")


def discover_stems(root) -> list[str]:
    return sorted(p.stem for p in (Path(root) / "damaged").glob("*.png"))


def load_sample(root, detector_dir, stem: str, with_target: bool = True) -> RefinementSample:
    root = Path(root)
    detector_dir = Path(detector_dir)
    image = _read_rgb(root / "damaged" / f"{stem}.png")
    detector = _read_mask(_detector_path(detector_dir, stem))
    target = _read_mask(root / "masks" / f"{stem}.png") if with_target else None
    if detector.shape != image.shape[:2]:
        raise ValueError(f"{stem}: detector mask shape {detector.shape} "
                         f"does not match image {image.shape[:2]}")
    if target is not None and target.shape != image.shape[:2]:
        raise ValueError(f"{stem}: target shape mismatch")
    return RefinementSample(stem=stem, image=image, detector=detector, target=target)


def split_stems(stems: list[str], val_fraction: float = 0.1) -> tuple[list[str], list[str]]:
    """Deterministic 90/10-style split by stem hash."""
    buckets = max(2, round(1.0 / max(val_fraction, 1e-6)))
    train, val = [], []
    for stem in stems:
        (val if zlib.crc32(stem.encode()) % buckets == 0 else train).append(stem)
    if not val:  # tiny corpora: hold out the lexicographically last stem
        val = [train.pop()]
    return train, val


def to_input_tensor(image: np.ndarray, detector: np.ndarray) -> torch.Tensor:
    """(H, W, 3) uint8 + (H, W) bool -> (4, H, W) float32."""
    rgb = (image.astype(np.float32) / 255.0 - IMAGENET_MEAN) / IMAGENET_STD
    channels = np.concatenate(
        [rgb.transpose(2, 0, 1), detector.astype(np.float32)[None]], axis=0
    )
    return torch.from_numpy(channels)


def random_training_crop(
    sample: RefinementSample, rng: np.random.Generator, crop: int
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """One augmented (input, target, detector) training triple.

    Scale jitter resizes by a factor in [0.8, 1.25] (nearest for masks),
    then a random crop, random flips, and a random quarter rotation.
    """
    image, detector, target = sample.image, sample.detector, sample.target
    h, w = detector.shape
    scale = rng.uniform(0.8, 1.25)
    sh, sw = max(crop, int(round(h * scale))), max(crop, int(round(w * scale)))
    if (sh, sw) != (h, w):
        image = np.asarray(
            Image.fromarray(image).resize((sw, sh), Image.BILINEAR), dtype=np.uint8
        )
        detector = np.asarray(
            Image.fromarray(detector.astype(np.uint8) * 255).resize((sw, sh), Image.NEAREST)
        ) > 127
        target = np.asarray(
            Image.fromarray(target.astype(np.uint8) * 255).resize((sw, sh), Image.NEAREST)
        ) > 127
    y0 = int(rng.integers(0, sh - crop + 1))
    x0 = int(rng.integers(0, sw - crop + 1))
    image = image[y0:y0 + crop, x0:x0 + crop]
    detector = detector[y0:y0 + crop, x0:x0 + crop]
    target = target[y0:y0 + crop, x0:x0 + crop]
    if rng.random() < 0.5:
        image, detector, target = image[:, ::-1], detector[:, ::-1], target[:, ::-1]
    if rng.random() < 0.5:
        image, detector, target = image[::-1], detector[::-1], target[::-1]
    quarter = int(rng.integers(0, 4))
    if quarter:
        image = np.rot90(image, quarter, axes=(0, 1))
        detector = np.rot90(detector, quarter)
        target = np.rot90(target, quarter)
    inputs = to_input_tensor(np.ascontiguousarray(image), np.ascontiguousarray(detector))
    return (
        inputs,
        torch.from_numpy(np.ascontiguousarray(target)).float(),
        torch.from_numpy(np.ascontiguousarray(detector)).float(),
    )
