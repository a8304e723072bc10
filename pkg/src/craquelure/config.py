"""Run configuration: defaults, TOML loading, CLI overrides.

A run config bundles the generator, detector and inpainting settings.
Every default reproduces the published operating point (detector
threshold 180, minimum component 5 px, one dilation with a radius-2
disk, diffusion lambda 0.25 / K 127 / 20 iterations, taper 2.0 px,
radius sigma 0.5 px, control sigma 8 px, 80-150 curves, 80-180 samples,
branch probability 0.3-0.5, 5x5 sigma-2 blur, mask threshold 50,
598x375 target size).

File format: TOML with ``[generate]``, ``[detect]``, ``[inpaint]`` and
``[refine]`` sections plus top-level ``seed`` and ``jobs``. Flags given
on the command line win over file values.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .inpainting import DiffusionConfig
from .morphology import DetectorConfig, disk2, square3, structuring_element
from .synthesis import CrackSpec

__all__ = ["RunConfig", "load_config", "config_hash"]

_SPEC_FIELDS = {f.name for f in fields(CrackSpec)}
_DIFFUSION_KEYS = {"lambda": "lam", "kappa": "kappa", "iterations": "iterations"}


def _se_name(se: np.ndarray) -> str:
    if np.array_equal(se, disk2()):
        return "disk2"
    if np.array_equal(se, square3()):
        return "square3"
    return "custom"


@dataclass
class RunConfig:
    """Everything a pipeline run needs, with paper defaults."""

    generate: CrackSpec = field(default_factory=CrackSpec)
    detect: DetectorConfig = field(default_factory=DetectorConfig)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    inpaint_method: str = "ad"
    refine_provider: str = "passthrough"
    refine_command: str = ""
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.inpaint_method not in ("mtm", "ad"):
            raise ValueError(f"inpaint method must be mtm or ad, got {self.inpaint_method!r}")
        if self.refine_provider not in ("passthrough", "external"):
            raise ValueError(
                f"refine provider must be passthrough or external, got {self.refine_provider!r}"
            )
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def to_dict(self) -> dict:
        g = self.generate
        return {
            "seed": self.seed,
            "jobs": self.jobs,
            "generate": {
                "curve_count_range": list(g.curve_count_range),
                "samples_range": list(g.samples_range),
                "control_sigma": g.control_sigma,
                "taper_alpha": g.taper_alpha,
                "radius_sigma": g.radius_sigma,
                "branch_prob": list(g.branch_prob),
                "crack_gray": g.crack_gray,
                "mask_threshold": g.mask_threshold,
                "blur_kernel": g.blur_kernel,
                "blur_sigma": g.blur_sigma,
                "erosion_kernel": g.erosion_kernel,
                "target_size": list(g.target_size),
            },
            "detect": {
                "variant": self.detect.variant,
                "se": _se_name(self.detect.se),
                "threshold": self.detect.threshold,
                "dilation_iters": self.detect.dilation_iters,
                "min_component": self.detect.min_component,
            },
            "inpaint": {
                "method": self.inpaint_method,
                "lambda": self.diffusion.lam,
                "kappa": self.diffusion.kappa,
                "iterations": self.diffusion.iterations,
            },
            "refine": {
                "provider": self.refine_provider,
                "command": self.refine_command,
            },
        }


def _apply_generate(spec_kwargs: dict, data: dict) -> None:
    for key, value in data.items():
        if key not in _SPEC_FIELDS:
            raise ValueError(f"unknown [generate] key {key!r}")
        if isinstance(value, list):
            value = tuple(value)
        spec_kwargs[key] = value


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from defaults, an optional TOML file, and overrides.

    ``overrides`` uses dotted keys (``"detect.threshold"``, ``"inpaint.lambda"``,
    ``"seed"``); ``None`` values are ignored so unset CLI flags pass through.
    """
    data: dict = {}
    if path is not None:
        with open(Path(path), "rb") as fh:
            data = tomllib.load(fh)

    merged: dict = {
        "seed": data.get("seed", 0),
        "jobs": data.get("jobs", 1),
        "generate": dict(data.get("generate", {})),
        "detect": dict(data.get("detect", {})),
        "inpaint": dict(data.get("inpaint", {})),
        "refine": dict(data.get("refine", {})),
    }
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if "." in key:
            section, name = key.split(".", 1)
            merged[section][name] = value
        else:
            merged[key] = value

    spec_kwargs: dict = {}
    _apply_generate(spec_kwargs, merged["generate"])

    det = merged["detect"]
    se = det.get("se", "disk2")
    detect_cfg = DetectorConfig(
        variant=det.get("variant", "both"),
        se=structuring_element(se) if isinstance(se, str) else np.asarray(se, dtype=bool),
        threshold=int(det.get("threshold", 180)),
        dilation_iters=int(det.get("dilation_iters", 1)),
        min_component=int(det.get("min_component", 5)),
    )

    inp = merged["inpaint"]
    diff_kwargs = {}
    for file_key, attr in _DIFFUSION_KEYS.items():
        if file_key in inp:
            diff_kwargs[attr] = inp[file_key]
    method = inp.get("method", "ad")

    refine = merged["refine"]
    return RunConfig(
        generate=CrackSpec(**spec_kwargs),
        detect=detect_cfg,
        diffusion=DiffusionConfig(**diff_kwargs),
        inpaint_method=method,
        refine_provider=refine.get("provider", "passthrough"),
        refine_command=refine.get("command", ""),
        seed=int(merged["seed"]),
        jobs=int(merged["jobs"]),
    )


def config_hash(cfg: RunConfig) -> str:
    """Short stable digest of the full configuration."""
    payload = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:12]
