"""End-to-end orchestration: detect -> refine -> inpaint, plus dataset I/O.

The refinement step is a subprocess boundary. A provider is either
``passthrough`` (the detector mask is used as-is, keeping the pipeline
self-contained) or ``external``: a command template with ``{image}``,
``{mask}`` and ``{out}`` placeholders that must exit 0 and write a valid
mask PNG of matching dimensions.

Dataset layout written by :func:`write_dataset` and consumed by
evaluation and by downstream training:

    <root>/clean/<stem>.png
    <root>/masks/<stem>.png
    <root>/damaged/<stem>.png
    <root>/manifest.json
"""

from __future__ import annotations

import json
import shlex
import subprocess
import tempfile
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import inpainting, morphology
from .config import RunConfig, config_hash
from .image_io import load_mask, load_png, save_png
from .synthesis import CrackSpec, triplet_for_index

__all__ = [
    "PipelineError",
    "run_refiner",
    "refine_mask_file",
    "restore_image",
    "write_dataset",
    "read_manifest",
    "dataset_stems",
]


class PipelineError(RuntimeError):
    """Stage-tagged pipeline failure."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


def run_refiner(command: str, image_path, mask_path, out_path) -> None:
    """Invoke an external refinement command and validate its output."""
    if not command:
        raise PipelineError("refine", "external provider requires a command template")
    rendered = command.format(image=str(image_path), mask=str(mask_path), out=str(out_path))
    proc = subprocess.run(shlex.split(rendered), capture_output=True, text=True)
    if proc.returncode != 0:
        raise PipelineError(
            "refine",
            f"provider exited with {proc.returncode}: {proc.stderr.strip()[:500]}",
        )
    if not Path(out_path).is_file():
        raise PipelineError("refine", f"provider did not write {out_path}")


def refine_mask_file(
    image_path,
    mask_path,
    out_path,
    provider: str = "passthrough",
    command: str = "",
) -> np.ndarray:
    """File-level refinement honoring the mask interchange contract.

    Passthrough copies the detector mask bytes verbatim. Either way the
    result must load as a mask whose dimensions match the image.
    """
    image = load_png(image_path)
    detector_mask = load_mask(mask_path)
    if detector_mask.shape != image.shape[:2]:
        raise PipelineError(
            "refine",
            f"detector mask {detector_mask.shape} does not match image {image.shape[:2]}",
        )
    if provider == "passthrough":
        Path(out_path).write_bytes(Path(mask_path).read_bytes())
        return detector_mask
    if provider != "external":
        raise PipelineError("refine", f"unknown provider {provider!r}")
    run_refiner(command, image_path, mask_path, out_path)
    try:
        refined = load_mask(out_path)
    except ValueError as exc:
        raise PipelineError("refine", f"provider wrote an invalid mask: {exc}") from exc
    if refined.shape != image.shape[:2]:
        raise PipelineError(
            "refine", f"provider mask {refined.shape} does not match image {image.shape[:2]}"
        )
    return refined


def _refine_in_memory(image: np.ndarray, detector_mask: np.ndarray, cfg: RunConfig) -> np.ndarray:
    if cfg.refine_provider == "passthrough":
        return detector_mask
    with tempfile.TemporaryDirectory(prefix="refine-") as tmp:
        tmp = Path(tmp)
        image_path = tmp / "image.png"
        mask_path = tmp / "mask.png"
        out_path = tmp / "refined.png"
        save_png(image, image_path)
        save_png(detector_mask, mask_path)
        return refine_mask_file(
            image_path, mask_path, out_path, provider="external", command=cfg.refine_command
        )


def restore_image(
    image: np.ndarray, cfg: RunConfig | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict]:
    """Run detect -> refine -> inpaint on one image.

    Returns (restored, detector_mask, refined_mask, report). The report
    carries per-stage wall-clock timings and mask statistics; wall-clock
    fields are the only nondeterministic outputs.
    """
    if cfg is None:
        cfg = RunConfig()
    image = np.asarray(image)

    t0 = time.perf_counter()
    try:
        detector_mask = morphology.detect(image, cfg.detect)
    except Exception as exc:
        raise PipelineError("detect", str(exc)) from exc
    t_detect = time.perf_counter() - t0

    t0 = time.perf_counter()
    refined = _refine_in_memory(image, detector_mask, cfg)
    t_refine = time.perf_counter() - t0

    try:
        restored, t_fill = inpainting.time_fill(image, refined, cfg.inpaint_method, cfg.diffusion)
    except Exception as exc:
        raise PipelineError("inpaint", str(exc)) from exc

    report = {
        "config_hash": config_hash(cfg),
        "inpaint_method": cfg.inpaint_method,
        "refine_provider": cfg.refine_provider,
        "detector_pixels": int(detector_mask.sum()),
        "refined_pixels": int(refined.sum()),
        "timings_s": {
            "detect": t_detect,
            "refine": t_refine,
            "inpaint": t_fill,
        },
    }
    return restored, detector_mask, refined, report


def write_dataset(
    sources: list[tuple[str, np.ndarray]],
    root,
    spec: CrackSpec,
    master_seed: int,
    jobs: int = 1,
) -> dict:
    """Generate and store aligned triplets for every (stem, image) source.

    Returns the manifest that was written to ``<root>/manifest.json``.
    """
    root = Path(root)
    for sub in ("clean", "masks", "damaged"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    entries = []
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_generate_one, stem, image, str(root), spec, master_seed, idx)
                for idx, (stem, image) in enumerate(sources)
            ]
            entries = [f.result() for f in futures]
    else:
        entries = [
            _generate_one(stem, image, str(root), spec, master_seed, idx)
            for idx, (stem, image) in enumerate(sources)
        ]

    spec_dict = asdict(spec)
    spec_dict.pop("seed")  # per-image seeds listed individually
    manifest = {
        "master_seed": int(master_seed),
        "spec": spec_dict,
        "images": entries,
    }
    with open(root / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def _generate_one(stem, image, root, spec, master_seed, idx) -> dict:
    root = Path(root)
    triplet, seed = triplet_for_index(image, spec, master_seed, idx)
    save_png(triplet.clean, root / "clean" / f"{stem}.png")
    save_png(triplet.mask, root / "masks" / f"{stem}.png")
    save_png(triplet.damaged, root / "damaged" / f"{stem}.png")
    return {"stem": stem, "seed": int(seed), "index": int(idx)}


def read_manifest(root) -> dict:
    with open(Path(root) / "manifest.json") as fh:
        return json.load(fh)


def dataset_stems(root) -> list[str]:
    """Stems of a dataset directory, from the manifest when present."""
    root = Path(root)
    manifest = root / "manifest.json"
    if manifest.is_file():
        with open(manifest) as fh:
            return [entry["stem"] for entry in json.load(fh)["images"]]
    return sorted(p.stem for p in (root / "clean").glob("*.png"))
