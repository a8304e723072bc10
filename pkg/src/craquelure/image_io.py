"""8-bit image and mask I/O plus the shared pixel-level primitives.

Conventions used across the toolkit:

* images are ``uint8`` numpy arrays, ``(H, W)`` for grayscale or
  ``(H, W, 3)`` for RGB;
* binary masks are ``bool`` arrays of shape ``(H, W)`` where ``True``
  marks a crack pixel;
* masks serialize to single-channel PNGs with 255 = crack, 0 = background.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

__all__ = [
    "load_png",
    "save_png",
    "load_mask",
    "to_grayscale",
    "label_components",
]

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


def load_png(path) -> np.ndarray:
    """Load an 8-bit grayscale or RGB PNG as a uint8 array.

    Alpha channels are dropped with a warning (no compositing). Palette
    and 16-bit PNGs are rejected.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    try:
        with Image.open(path) as im:
            if im.format != "PNG":
                raise ValueError(f"{path}: not a PNG file (format={im.format})")
            mode = im.mode
            if mode == "P":
                raise ValueError(f"{path}: palette PNGs are not supported")
            if mode in ("I", "I;16", "I;16B", "I;16L", "F"):
                raise ValueError(f"{path}: unsupported bit depth (mode={mode})")
            if mode in ("RGBA", "LA"):
                warnings.warn(f"{path}: alpha channel dropped", stacklevel=2)
                im = im.convert("RGB" if mode == "RGBA" else "L")
            elif mode not in ("L", "RGB"):
                raise ValueError(f"{path}: unsupported color type (mode={mode})")
            data = np.asarray(im, dtype=np.uint8)
    except (OSError, SyntaxError) as exc:
        # PIL's UnidentifiedImageError is an OSError subclass
        if isinstance(exc, FileNotFoundError):
            raise
        raise ValueError(f"{path}: decode failure ({exc})") from exc
    return data


def save_png(image: np.ndarray, path) -> None:
    """Write an image or boolean mask to ``path`` as PNG.

    Boolean masks are stored as single-channel 0/255. Round-trips through
    :func:`load_png` / :func:`load_mask` are bit-exact.
    """
    path = Path(path)
    arr = np.asarray(image)
    if arr.dtype == bool:
        arr = np.where(arr, 255, 0).astype(np.uint8)
    elif arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 or bool data, got {arr.dtype}")
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
        raise ValueError(f"expected (H, W) or (H, W, 3) data, got shape {arr.shape}")
    Image.fromarray(arr).save(path, format="PNG")


def load_mask(path) -> np.ndarray:
    """Load a mask PNG (0/255 single channel) as a boolean array."""
    data = load_png(path)
    if data.ndim != 2:
        raise ValueError(f"{path}: mask must be single-channel")
    return data > 127


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Rec.601 luma, round-half-up: round(0.299 R + 0.587 G + 0.114 B).

    Single-channel input is returned unchanged.
    """
    if image.ndim == 2:
        return image
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected 1 or 3 channels, got shape {image.shape}")
    rgb = image.astype(np.float64)
    luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return np.floor(luma + 0.5).astype(np.uint8)


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected component labeling of a boolean mask.

    Returns ``(labels, count)`` where ``labels`` is int32 with 0 for
    background and components numbered 1..count in raster-scan
    first-encounter order.
    """
    mask = np.asarray(mask, dtype=bool)
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    labels = labels.astype(np.int32, copy=False)
    if count == 0:
        return labels, 0
    # renumber by first occurrence so label order is deterministic
    flat = labels.ravel()
    first = np.full(count + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat, np.arange(flat.size, dtype=np.int64))
    order = np.argsort(first[1:], kind="stable") + 1
    remap = np.zeros(count + 1, dtype=np.int32)
    remap[order] = np.arange(1, count + 1, dtype=np.int32)
    return remap[flat].reshape(mask.shape), count
