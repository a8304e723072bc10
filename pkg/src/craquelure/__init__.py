"""Craquelure: crack detection and virtual restoration for digitized paintings.

The toolkit covers the full annotation-free workflow: synthetic crack
dataset generation, morphological top-hat detection, mask refinement via
pluggable providers, trimmed-mean and anisotropic-diffusion inpainting,
and detection/restoration metrics.
"""

from .config import RunConfig, load_config
from .image_io import label_components, load_mask, load_png, save_png, to_grayscale
from .inpainting import DiffusionConfig, ad_fill, fill, mtm_fill, time_fill
from .metrics import MetricsReport, aggregate, confusion, detection_metrics, mae, psnr, ssim
from .morphology import (
    DetectorConfig,
    black_top_hat,
    detect,
    dilate,
    disk2,
    erode,
    global_entropy,
    size_filter,
    square3,
    white_top_hat,
)
from .pipeline import restore_image, write_dataset
from .synthesis import (
    BezierCurve,
    CrackSpec,
    Triplet,
    apply_damage,
    bezier_eval,
    generate_triplet,
    procedural_painting,
    rasterize_crack,
    refine_mask,
    sample_curve,
    spawn_branch,
)

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "load_config",
    "load_png",
    "save_png",
    "load_mask",
    "to_grayscale",
    "label_components",
    "DetectorConfig",
    "square3",
    "disk2",
    "erode",
    "dilate",
    "black_top_hat",
    "white_top_hat",
    "detect",
    "size_filter",
    "global_entropy",
    "DiffusionConfig",
    "mtm_fill",
    "ad_fill",
    "fill",
    "time_fill",
    "MetricsReport",
    "confusion",
    "detection_metrics",
    "ssim",
    "psnr",
    "mae",
    "aggregate",
    "CrackSpec",
    "BezierCurve",
    "Triplet",
    "bezier_eval",
    "sample_curve",
    "rasterize_crack",
    "spawn_branch",
    "refine_mask",
    "apply_damage",
    "generate_triplet",
    "procedural_painting",
    "restore_image",
    "write_dataset",
]
