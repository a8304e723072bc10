"""Detection and restoration quality metrics.

Detection metrics (accuracy, F1, IoU, Dice, MCC) are computed from a
pixel confusion matrix with "crack" as the positive class. Restoration
metrics compare a restored image against the clean original: SSIM on
luma with 8x8 uniform sliding windows, PSNR over all channels, and mean
absolute error.

The low-level functions return fractions (SSIM in [-1, 1], detection
metrics in [0, 1] except MCC in [-1, 1]); a :class:`MetricsReport`
stores the percent-scale numbers used in result tables (detection and
SSIM x100) alongside PSNR in dB and MAE in intensity units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .image_io import to_grayscale

__all__ = [
    "ConfusionCounts",
    "confusion",
    "detection_metrics",
    "ssim",
    "psnr",
    "mae",
    "MetricsReport",
    "aggregate",
]

PSNR_CAP_DB = 99.0  # sentinel for identical images (MSE = 0)

DETECTION_KEYS = ("accuracy", "f1", "iou", "dice", "mcc")
RESTORATION_KEYS = ("ssim", "psnr_db", "mae")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def confusion(pred: np.ndarray, truth: np.ndarray) -> ConfusionCounts:
    """Pixelwise confusion counts, crack = positive."""
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    _same_shape(pred, truth)
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    tn = int(np.count_nonzero(~pred & ~truth))
    return ConfusionCounts(tp, fp, fn, tn)


def detection_metrics(c: ConfusionCounts) -> dict[str, float]:
    """Accuracy, F1, IoU, Dice and MCC as fractions.

    Conventions: when both masks are empty (tp = fp = fn = 0) the overlap
    scores are 1; MCC is 0 whenever a denominator factor vanishes.
    """
    if c.total <= 0:
        raise ValueError("empty confusion matrix")
    tp, fp, fn, tn = c.tp, c.fp, c.fn, c.tn
    accuracy = (tp + tn) / c.total
    if tp == 0 and fp == 0 and fn == 0:
        f1 = iou = 1.0
    else:
        f1 = 2 * tp / (2 * tp + fp + fn)
        iou = tp / (tp + fp + fn)
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = 0.0 if denom == 0 else (tp * tn - fp * fn) / math.sqrt(denom)
    return {"accuracy": accuracy, "f1": f1, "iou": iou, "dice": f1, "mcc": mcc}


def _window_sums(arr: np.ndarray, wh: int, ww: int) -> np.ndarray:
    """Sums over every wh x ww window (stride 1) via an integral image."""
    s = np.zeros((arr.shape[0] + 1, arr.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(arr, axis=0), axis=1, out=s[1:, 1:])
    return s[wh:, ww:] - s[:-wh, ww:] - s[wh:, :-ww] + s[:-wh, :-ww]


def ssim(a: np.ndarray, b: np.ndarray, window: int = 8) -> float:
    """Mean local SSIM on luma over uniform ``window``-square patches.

    Constants C1 = (0.01*255)^2, C2 = (0.03*255)^2; window moments are
    maximum-likelihood (divide by N). Windows clamp to the image when it
    is smaller than ``window``. Returns a fraction in [-1, 1].
    """
    a = np.asarray(a)
    b = np.asarray(b)
    _same_shape(a, b)
    x = to_grayscale(a).astype(np.float64)
    y = to_grayscale(b).astype(np.float64)
    wh = min(window, x.shape[0])
    ww = min(window, x.shape[1])
    n = wh * ww
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    mx = _window_sums(x, wh, ww) / n
    my = _window_sums(y, wh, ww) / n
    vx = _window_sums(x * x, wh, ww) / n - mx * mx
    vy = _window_sums(y * y, wh, ww) / n - my * my
    cov = _window_sums(x * y, wh, ww) / n - mx * my
    score = ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
    return float(score.mean())


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB over all channels; 99 dB cap at MSE 0."""
    a = np.asarray(a)
    b = np.asarray(b)
    _same_shape(a, b)
    diff = a.astype(np.float64) - b.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return 10.0 * math.log10(255.0 * 255.0 / mse)


def mae(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute intensity difference over all channels."""
    a = np.asarray(a)
    b = np.asarray(b)
    _same_shape(a, b)
    return float(np.mean(np.abs(a.astype(np.float64) - b.astype(np.float64))))


@dataclass
class MetricsReport:
    """Named results of one detection + restoration evaluation.

    Detection values and SSIM are stored on the percent scale used in
    result tables; PSNR in dB, MAE in 8-bit intensity units.
    """

    detection: dict[str, float] | None = None
    restoration: dict[str, float] | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def evaluate(
        cls,
        pred_mask: np.ndarray | None = None,
        truth_mask: np.ndarray | None = None,
        restored: np.ndarray | None = None,
        clean: np.ndarray | None = None,
        meta: dict | None = None,
    ) -> "MetricsReport":
        detection = None
        restoration = None
        if pred_mask is not None and truth_mask is not None:
            fractions = detection_metrics(confusion(pred_mask, truth_mask))
            detection = {k: 100.0 * v for k, v in fractions.items()}
        if restored is not None and clean is not None:
            restoration = {
                "ssim": 100.0 * ssim(restored, clean),
                "psnr_db": psnr(restored, clean),
                "mae": mae(restored, clean),
            }
        full_meta = {"metric_scope": "global"}
        if meta:
            full_meta.update(meta)
        return cls(detection=detection, restoration=restoration, meta=full_meta)

    def to_dict(self, ndigits: int = 2) -> dict:
        out: dict = {"meta": dict(self.meta)}
        if self.detection is not None:
            out["detection"] = {k: round(self.detection[k], ndigits) for k in DETECTION_KEYS}
        if self.restoration is not None:
            out["restoration"] = {
                k: round(self.restoration[k], ndigits) for k in RESTORATION_KEYS
            }
        return out


def aggregate(reports: list[MetricsReport]) -> MetricsReport:
    """Arithmetic mean of each metric across reports."""
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    detection = None
    restoration = None
    with_det = [r.detection for r in reports if r.detection is not None]
    with_res = [r.restoration for r in reports if r.restoration is not None]
    if with_det:
        detection = {k: sum(d[k] for d in with_det) / len(with_det) for k in DETECTION_KEYS}
    if with_res:
        restoration = {
            k: sum(r[k] for r in with_res) / len(with_res) for k in RESTORATION_KEYS
        }
    return MetricsReport(
        detection=detection,
        restoration=restoration,
        meta={"images": len(reports), "aggregate": "mean"},
    )
