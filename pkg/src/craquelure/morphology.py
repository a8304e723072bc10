"""Morphological crack detector: top-hat transforms, thresholding and
size-based noise filtering.

Cracks read as thin local intensity extrema, so a black top-hat
(closing minus image) lights up dark fissures and a white top-hat
(image minus opening) the rare inverse-contrast ones. Thresholding the
response, dilating the binary mask and dropping tiny components yields
the candidate crack mask.

All grayscale morphology here is a plain min/max filter over the
structuring-element footprint with replicate border padding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .image_io import label_components, to_grayscale

__all__ = [
    "square3",
    "disk2",
    "structuring_element",
    "DetectorConfig",
    "erode",
    "dilate",
    "black_top_hat",
    "white_top_hat",
    "detect",
    "size_filter",
    "global_entropy",
]


def square3() -> np.ndarray:
    """All-true 3x3 footprint."""
    return np.ones((3, 3), dtype=bool)


def disk2() -> np.ndarray:
    """Discrete disk of radius 2: 5x5 footprint, (i-2)^2 + (j-2)^2 <= 4."""
    yy, xx = np.mgrid[-2:3, -2:3]
    return (yy * yy + xx * xx) <= 4


def structuring_element(name: str) -> np.ndarray:
    if name == "square3":
        return square3()
    if name == "disk2":
        return disk2()
    raise ValueError(f"unknown structuring element {name!r}")


def _validate_se(se: np.ndarray) -> np.ndarray:
    se = np.asarray(se, dtype=bool)
    if se.ndim != 2 or se.shape[0] % 2 == 0 or se.shape[1] % 2 == 0:
        raise ValueError("structuring element must be 2-D with odd dimensions")
    if not se[se.shape[0] // 2, se.shape[1] // 2]:
        raise ValueError("structuring element center must be true")
    return se


@dataclass
class DetectorConfig:
    """Knobs of the classical detector.

    ``variant`` selects which top-hat responses are thresholded; ``both``
    takes the pixelwise union of the black and white masks.
    """

    variant: str = "both"
    se: np.ndarray = field(default_factory=disk2)
    threshold: int = 180
    dilation_iters: int = 1
    min_component: int = 5

    def __post_init__(self):
        if self.variant not in ("black", "white", "both"):
            raise ValueError(f"variant must be black/white/both, got {self.variant!r}")
        if not 0 <= self.threshold <= 255:
            raise ValueError("threshold must be in [0, 255]")
        if self.dilation_iters < 0:
            raise ValueError("dilation_iters must be >= 0")
        if self.min_component < 0:
            raise ValueError("min_component must be >= 0")
        self.se = _validate_se(self.se)


def _check_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("grayscale morphology expects a single-channel image")
    return img


def erode(img: np.ndarray, se: np.ndarray) -> np.ndarray:
    """Grayscale erosion: min filter over the footprint, replicate borders."""
    return ndimage.minimum_filter(_check_gray(img), footprint=_validate_se(se), mode="nearest")


def dilate(img: np.ndarray, se: np.ndarray) -> np.ndarray:
    """Grayscale dilation: max filter over the footprint, replicate borders."""
    return ndimage.maximum_filter(_check_gray(img), footprint=_validate_se(se), mode="nearest")


def black_top_hat(img: np.ndarray, se: np.ndarray) -> np.ndarray:
    """closing(img) - img; highlights dark detail on light background."""
    img = _check_gray(img)
    closing = erode(dilate(img, se), se)
    # closing >= img for the (symmetric) built-in footprints; clip guards custom ones
    return np.clip(closing.astype(np.int16) - img.astype(np.int16), 0, 255).astype(np.uint8)


def white_top_hat(img: np.ndarray, se: np.ndarray) -> np.ndarray:
    """img - opening(img); highlights bright detail on dark background."""
    img = _check_gray(img)
    opening = dilate(erode(img, se), se)
    return np.clip(img.astype(np.int16) - opening.astype(np.int16), 0, 255).astype(np.uint8)


def binary_dilate(mask: np.ndarray, se: np.ndarray) -> np.ndarray:
    """Binary dilation with the same footprint/border conventions."""
    mask = np.asarray(mask, dtype=bool)
    return ndimage.maximum_filter(
        mask.view(np.uint8), footprint=_validate_se(se), mode="nearest"
    ).astype(bool)


def detect(img: np.ndarray, cfg: DetectorConfig | None = None) -> np.ndarray:
    """Run the full detector on an RGB or grayscale image.

    Pipeline: luma -> top-hat response(s) -> strict threshold ->
    ``dilation_iters`` rounds of binary dilation -> size filter.
    """
    if cfg is None:
        cfg = DetectorConfig()
    gray = to_grayscale(np.asarray(img))
    mask = np.zeros(gray.shape, dtype=bool)
    if cfg.variant in ("black", "both"):
        mask |= black_top_hat(gray, cfg.se) > cfg.threshold
    if cfg.variant in ("white", "both"):
        mask |= white_top_hat(gray, cfg.se) > cfg.threshold
    for _ in range(cfg.dilation_iters):
        mask = binary_dilate(mask, cfg.se)
    return size_filter(mask, cfg.min_component)


def size_filter(mask: np.ndarray, min_component: int) -> np.ndarray:
    """Remove 8-connected components with fewer than ``min_component`` pixels."""
    mask = np.asarray(mask, dtype=bool)
    if min_component <= 1 or not mask.any():
        return mask.copy()
    labels, count = label_components(mask)
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    keep = areas >= min_component
    keep[0] = False
    return keep[labels]


def global_entropy(img: np.ndarray) -> float:
    """Shannon entropy (bits) of the 256-bin intensity histogram."""
    img = _check_gray(img)
    hist = np.bincount(img.ravel(), minlength=256).astype(np.float64)
    p = hist / hist.sum()
    p = p[p > 0.0]
    return float(-(p * np.log2(p)).sum())
