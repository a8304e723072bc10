"""Command-line interface.

Subcommands mirror the workflow stages:

* ``generate``  - build a synthetic triplet dataset from clean sources
* ``detect``    - morphological crack detection, one mask PNG per image
* ``refine``    - run a refinement provider over a detector mask
* ``inpaint``   - fill a given mask in a given image
* ``evaluate``  - score predictions against a dataset (per-image + MEAN)
* ``restore``   - full detect -> refine -> inpaint pipeline

Masks interchange as 8-bit single-channel PNGs, 255 = crack, matching
the source image dimensions. All commands accept ``--config`` (TOML);
explicit flags override file values.
"""

from __future__ import annotations

import argparse
import functools
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import inpainting, morphology
from .config import RunConfig, config_hash, load_config
from .image_io import load_mask, load_png, save_png
from .metrics import MetricsReport, aggregate
from .pipeline import (
    PipelineError,
    dataset_stems,
    refine_mask_file,
    restore_image,
    write_dataset,
)

PRED_MASK_SUFFIXES = ("{stem}.png", "{stem}_mask.png", "{stem}_refined.png")
PRED_RESTORED_SUFFIXES = ("{stem}.png", "{stem}_restored.png")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _ensure_rgb(image: np.ndarray) -> np.ndarray:
    if image.ndim == 2:
        return np.stack([image] * 3, axis=-1)
    return image


def _config_from_args(args) -> RunConfig:
    overrides = {
        "seed": getattr(args, "seed", None),
        "jobs": getattr(args, "jobs", None),
        "detect.variant": getattr(args, "variant", None),
        "detect.se": getattr(args, "se", None),
        "detect.threshold": getattr(args, "threshold", None),
        "detect.dilation_iters": getattr(args, "dilation_iters", None),
        "detect.min_component": getattr(args, "min_component", None),
        "inpaint.method": getattr(args, "method", None),
        "inpaint.lambda": getattr(args, "lam", None),
        "inpaint.kappa": getattr(args, "kappa", None),
        "inpaint.iterations": getattr(args, "iterations", None),
        "refine.provider": getattr(args, "provider", None),
        "refine.command": getattr(args, "command", None),
    }
    return load_config(getattr(args, "config", None), overrides)


# ----------------------------------------------------------------------
# generate
# ----------------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = _config_from_args(args)
    source = Path(args.source)
    paths = sorted(source.glob("*.png")) if source.is_dir() else []
    if not paths:
        return _fail(f"no PNG sources found in {source}")
    sources = []
    for p in paths:
        try:
            sources.append((p.stem, _ensure_rgb(load_png(p))))
        except (ValueError, FileNotFoundError) as exc:
            return _fail(f"unreadable source {p}: {exc}")
    manifest = write_dataset(sources, args.out, cfg.generate, cfg.seed, jobs=cfg.jobs)
    print(f"wrote {len(manifest['images'])} triplets to {args.out}")
    return 0


# ----------------------------------------------------------------------
# detect
# ----------------------------------------------------------------------

def _detect_one(image_path: Path, out_dir: Path, cfg: RunConfig,
                no_size_filter: bool) -> str | None:
    """Worker for one detection; returns an error string or None."""
    try:
        image = load_png(image_path)
        mask = morphology.detect(image, cfg.detect)
        save_png(mask, out_dir / f"{image_path.stem}_mask.png")
        if no_size_filter:
            raw_cfg = morphology.DetectorConfig(
                variant=cfg.detect.variant,
                se=cfg.detect.se,
                threshold=cfg.detect.threshold,
                dilation_iters=cfg.detect.dilation_iters,
                min_component=0,
            )
            raw = morphology.detect(image, raw_cfg)
            save_png(raw, out_dir / f"{image_path.stem}_mask_nofilter.png")
        return None
    except (ValueError, FileNotFoundError) as exc:
        return f"{image_path}: {exc}"


def _run_batch(worker, items, jobs):
    """Run a per-image worker serially or in a process pool, in input order."""
    if jobs > 1 and len(items) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(worker, items))
    return [worker(item) for item in items]


def cmd_detect(args) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [Path(p) for p in args.images]
    worker = functools.partial(_detect_one, out_dir=out_dir, cfg=cfg,
                               no_size_filter=args.no_size_filter)
    failures = 0
    for path, error in zip(paths, _run_batch(worker, paths, cfg.jobs)):
        if error is None:
            print(f"detect: {path.name} -> {path.stem}_mask.png")
        else:
            failures += 1
            print(f"detect: {error}", file=sys.stderr)
    return 1 if failures else 0


# ----------------------------------------------------------------------
# refine
# ----------------------------------------------------------------------

def cmd_refine(args) -> int:
    cfg = _config_from_args(args)
    try:
        refine_mask_file(
            args.image,
            args.mask,
            args.out,
            provider=cfg.refine_provider,
            command=cfg.refine_command,
        )
    except (PipelineError, ValueError, FileNotFoundError) as exc:
        return _fail(str(exc))
    print(f"refine: wrote {args.out}")
    return 0


# ----------------------------------------------------------------------
# inpaint
# ----------------------------------------------------------------------

def cmd_inpaint(args) -> int:
    cfg = _config_from_args(args)
    try:
        image = load_png(args.image)
        mask = load_mask(args.mask)
        restored, seconds = inpainting.time_fill(image, mask, cfg.inpaint_method, cfg.diffusion)
    except (ValueError, FileNotFoundError) as exc:
        return _fail(str(exc))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_png(restored, out)
    report = {
        "image": str(args.image),
        "mask": str(args.mask),
        "method": cfg.inpaint_method,
        "seconds": seconds,
        "config_hash": config_hash(cfg),
        "timestamp": time.time(),
    }
    with open(out.with_suffix(".json"), "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"inpaint[{cfg.inpaint_method}]: wrote {out} ({seconds:.3f} s)")
    return 0


# ----------------------------------------------------------------------
# evaluate
# ----------------------------------------------------------------------

def _find_pred(directory: Path | None, stem: str, patterns) -> Path | None:
    if directory is None:
        return None
    for pattern in patterns:
        candidate = directory / pattern.format(stem=stem)
        if candidate.is_file():
            return candidate
    return None


def _format_row(name: str, report: MetricsReport) -> str:
    det = report.detection
    res = report.restoration
    det_cells = (
        "  ".join(f"{det[k]:6.2f}" for k in ("accuracy", "f1", "iou", "dice", "mcc"))
        if det
        else "  ".join(["     -"] * 5)
    )
    res_cells = (
        f"{res['ssim']:6.2f}  {res['psnr_db']:6.2f}  {res['mae']:6.2f}" if res else "     -" * 3
    )
    return f"{name:<16} {det_cells} | {res_cells}"


def cmd_evaluate(args) -> int:
    dataset = Path(args.dataset)
    pred_masks = Path(args.pred_masks) if args.pred_masks else None
    pred_restored = Path(args.pred_restored) if args.pred_restored else None
    if pred_masks is None and pred_restored is None:
        return _fail("nothing to evaluate: give --pred-masks and/or --pred-restored")
    stems = dataset_stems(dataset)
    if not stems:
        return _fail(f"no dataset entries under {dataset}")

    reports: dict[str, MetricsReport] = {}
    missing: list[str] = []
    for stem in stems:
        truth_path = dataset / "masks" / f"{stem}.png"
        clean_path = dataset / "clean" / f"{stem}.png"
        mask_path = _find_pred(pred_masks, stem, PRED_MASK_SUFFIXES)
        restored_path = _find_pred(pred_restored, stem, PRED_RESTORED_SUFFIXES)
        if mask_path is None and restored_path is None:
            missing.append(stem)
            continue
        reports[stem] = MetricsReport.evaluate(
            pred_mask=load_mask(mask_path) if mask_path else None,
            truth_mask=load_mask(truth_path) if mask_path else None,
            restored=load_png(restored_path) if restored_path else None,
            clean=load_png(clean_path) if restored_path else None,
            meta={"image": stem, "timestamp": time.time()},
        )
    if missing:
        print(f"warning: no predictions for {len(missing)} image(s): "
              f"{', '.join(missing[:8])}{'...' if len(missing) > 8 else ''}",
              file=sys.stderr)
    if not reports:
        return _fail("no predictions matched the dataset stems")

    mean = aggregate(list(reports.values()))
    header = (f"{'image':<16} {'Acc':>6}  {'F1':>6}  {'IoU':>6}  {'Dice':>6}  {'MCC':>6} | "
              f"{'SSIM':>6}  {'PSNR':>6}  {'MAE':>6}")
    print(header)
    print("-" * len(header))
    for stem in sorted(reports):
        print(_format_row(stem, reports[stem]))
    print("-" * len(header))
    print(_format_row("MEAN", mean))

    if args.out:
        payload = {
            "images": {stem: reports[stem].to_dict() for stem in sorted(reports)},
            "mean": mean.to_dict(),
        }
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=2)
        print(f"evaluate: wrote {out}")
    return 0


# ----------------------------------------------------------------------
# restore
# ----------------------------------------------------------------------

def _restore_one(image_path: Path, out_dir: Path, cfg: RunConfig,
                 keep_intermediate: bool) -> tuple[str | None, int]:
    """Worker for one restoration; returns (error or None, crack px)."""
    try:
        image = load_png(image_path)
        restored, detected, refined, report = restore_image(image, cfg)
    except (PipelineError, ValueError, FileNotFoundError) as exc:
        return f"{image_path}: {exc}", 0
    stem = image_path.stem
    save_png(restored, out_dir / f"{stem}_restored.png")
    if keep_intermediate:
        save_png(detected, out_dir / f"{stem}_detected.png")
        save_png(refined, out_dir / f"{stem}_refined.png")
    report["image"] = str(image_path)
    report["timestamp"] = time.time()
    with open(out_dir / f"{stem}_report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    return None, report["refined_pixels"]


def cmd_restore(args) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [Path(p) for p in args.images]
    worker = functools.partial(_restore_one, out_dir=out_dir, cfg=cfg,
                               keep_intermediate=args.keep_intermediate)
    failures = 0
    for path, (error, crack_px) in zip(paths, _run_batch(worker, paths, cfg.jobs)):
        if error is None:
            print(f"restore: {path.name} -> {path.stem}_restored.png ({crack_px} crack px)")
        else:
            failures += 1
            print(f"restore: {error}", file=sys.stderr)
    return 1 if failures else 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--jobs", type=int, help="parallel workers for batch commands")


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", choices=["black", "white", "both"])
    p.add_argument("--se", choices=["square3", "disk2"], help="structuring element")
    p.add_argument("--threshold", type=int)
    p.add_argument("--dilation-iters", dest="dilation_iters", type=int)
    p.add_argument("--min-component", dest="min_component", type=int)


def _add_inpaint_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=["mtm", "ad"])
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--iterations", type=int)


def _add_refine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--provider", choices=["passthrough", "external"])
    p.add_argument("--command", help="external provider template with {image} {mask} {out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="craquelure",
        description="Crack detection and virtual restoration for digitized paintings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a synthetic triplet dataset")
    p.add_argument("--source", required=True, help="directory of clean source PNGs")
    p.add_argument("--out", required=True, help="dataset root to create")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("detect", help="morphological crack detection")
    p.add_argument("images", nargs="+", help="input image PNGs")
    p.add_argument("--out", required=True, help="output directory for masks")
    p.add_argument("--no-size-filter", action="store_true",
                   help="also write the mask before size filtering")
    _add_detector_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("refine", help="refine a detector mask via a provider")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True, help="detector mask PNG")
    p.add_argument("--out", required=True, help="refined mask PNG to write")
    _add_refine_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("inpaint", help="fill a crack mask in an image")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True, help="restored PNG to write")
    _add_inpaint_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("evaluate", help="score predictions against a dataset")
    p.add_argument("--dataset", required=True, help="dataset root (clean/masks/damaged)")
    p.add_argument("--pred-masks", dest="pred_masks", help="directory of predicted masks")
    p.add_argument("--pred-restored", dest="pred_restored",
                   help="directory of restored images")
    p.add_argument("--out", help="write the JSON report here")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("restore", help="detect, refine and inpaint in one go")
    p.add_argument("images", nargs="+", help="input image PNGs")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--keep-intermediate", action="store_true",
                   help="also write detector and refined masks")
    _add_detector_flags(p)
    _add_inpaint_flags(p)
    _add_refine_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_restore)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
