"""Command line: train on a generated dataset, refine masks at inference.

The infer subcommand uses positional image/mask/out arguments so it
slots directly into the restoration pipeline's external-provider
template:

    refinenet infer {image} {mask} {out} --checkpoint model.pt
"""

from __future__ import annotations

import argparse
import sys

from .train import TrainConfig, train


def cmd_train(args) -> int:
    cfg = TrainConfig(
        lr=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        patience=args.patience,
        gamma=args.gamma,
        inference_gamma=args.inference_gamma,
        crop=args.crop,
        seed=args.seed,
    )
    log = train(args.dataset, args.detector_masks, args.out, cfg, log_path=args.log)
    for entry in log["epochs"]:
        print(f"epoch {entry['epoch']:>3}: loss {entry['train_loss']:.4f} "
              f"val IoU {entry['val_iou']:.4f} ({entry['seconds']:.1f}s)")
    print(f"best val IoU {log['best_val_iou']:.4f}; checkpoint at {args.out}")
    return 0


def cmd_infer(args) -> int:
    from .infer import refine_file

    try:
        refined = refine_file(args.checkpoint, args.image, args.mask, args.out,
                              gamma=args.gamma)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"refined mask: {int(refined.sum())} crack px -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="refinenet",
                                     description="Detector-guided crack mask refinement")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune adapters on a synthetic dataset")
    p.add_argument("--dataset", required=True, help="dataset root (clean/masks/damaged)")
    p.add_argument("--detector-masks", dest="detector_masks", required=True,
                   help="directory of precomputed detector masks")
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--log", help="write the JSON training log here")
    p.add_argument("--lr", type=float, default=2e-4)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=8)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--gamma", type=float, default=1.0,
                   help="guided-logit strength during training")
    p.add_argument("--inference-gamma", dest="inference_gamma", type=float, default=0.0)
    p.add_argument("--crop", type=int, default=96)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="refine one detector mask")
    p.add_argument("image", help="input image PNG")
    p.add_argument("mask", help="detector mask PNG")
    p.add_argument("out", help="refined mask PNG to write")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--gamma", type=float, default=None,
                   help="inference-time guided-logit strength (default: checkpoint header)")
    p.set_defaults(func=cmd_infer)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
