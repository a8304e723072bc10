"""Adapter training with patience-based early stopping on validation IoU.

Only the low-rank adapters and the decode head receive gradients; the
randomly initialized backbone stays frozen (there is no pretrained
checkpoint to start from in this build, so the base function is the
fixed random network). Checkpoints are single files written atomically
(temp + rename) holding the adapter and head tensors, the frozen base,
and a JSON-style header describing the architecture.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .data import discover_stems, load_sample, random_training_crop, split_stems, to_input_tensor
from .losses import LossConfig, guided_logits, hybrid_loss
from .model import BACKBONE_ID, build_model, trainable_parameters

__all__ = ["TrainConfig", "train", "save_checkpoint", "load_checkpoint", "predict_mask"]


@dataclass
class TrainConfig:
    lr: float = 2e-4
    batch_size: int = 8
    epochs: int = 20
    patience: int = 5
    gamma: float = 1.0           # guided-logit strength during training
    weight_floor: float = 0.01   # CE weight off the detector mask
    dice_weight: float = 2.0
    inference_gamma: float = 0.0
    rank: int = 8
    lora_alpha: float = 16.0
    lora_dropout: float = 0.1
    crop: int = 112
    crops_per_image: int = 40
    val_fraction: float = 0.1
    seed: int = 0

    def loss_config(self) -> LossConfig:
        return LossConfig(gamma=self.gamma, weight_floor=self.weight_floor,
                          dice_weight=self.dice_weight)


def predict_mask(model: torch.nn.Module, image: np.ndarray, detector: np.ndarray,
                 gamma: float = 0.0) -> np.ndarray:
    """Full-image inference: crack iff the guided logit is positive."""
    model.eval()
    with torch.no_grad():
        inputs = to_input_tensor(image, detector).unsqueeze(0)
        logits = model(inputs)[0, 0]
        guided = guided_logits(logits, torch.from_numpy(detector.astype(np.float32)), gamma)
        return (guided > 0).numpy()


def _mask_iou(pred: np.ndarray, truth: np.ndarray) -> float:
    union = np.count_nonzero(pred | truth)
    if union == 0:
        return 1.0
    return np.count_nonzero(pred & truth) / union


def _validation_iou(model, samples, gamma) -> float:
    scores = [
        _mask_iou(predict_mask(model, s.image, s.detector, gamma), s.target)
        for s in samples
    ]
    return float(np.mean(scores))


def train(dataset_root, detector_dir, out_path, cfg: TrainConfig | None = None,
          log_path=None) -> dict:
    """Train on a generated dataset; returns the training log.

    ``dataset_root`` follows the clean/masks/damaged layout;
    ``detector_dir`` holds the precomputed detector masks. The best
    checkpoint (by validation IoU) is written to ``out_path``.
    """
    if cfg is None:
        cfg = TrainConfig()
    stems = discover_stems(dataset_root)
    if not stems:
        raise ValueError(f"no dataset entries under {dataset_root}")
    train_stems, val_stems = split_stems(stems, cfg.val_fraction)
    train_samples = [load_sample(dataset_root, detector_dir, s) for s in train_stems]
    val_samples = [load_sample(dataset_root, detector_dir, s) for s in val_stems]

    torch.manual_seed(cfg.seed)
    model = build_model(rank=cfg.rank, lora_alpha=cfg.lora_alpha,
                        lora_dropout=cfg.lora_dropout, seed=cfg.seed)
    params = trainable_parameters(model)
    optimizer = torch.optim.AdamW(params, lr=cfg.lr)
    loss_cfg = cfg.loss_config()
    rng = np.random.default_rng(cfg.seed)

    log = {"epochs": [], "train_stems": train_stems, "val_stems": val_stems,
           "config": asdict(cfg)}
    best_iou = -1.0
    best_state = None
    stale = 0
    for epoch in range(cfg.epochs):
        model.train()
        order = rng.permutation(len(train_samples) * cfg.crops_per_image)
        losses = []
        batch: list[tuple] = []
        start = time.perf_counter()
        for flat_index in order:
            sample = train_samples[int(flat_index) % len(train_samples)]
            batch.append(random_training_crop(sample, rng, cfg.crop))
            if len(batch) < cfg.batch_size and int(flat_index) != int(order[-1]):
                continue
            inputs = torch.stack([b[0] for b in batch])
            targets = torch.stack([b[1] for b in batch])
            detectors = torch.stack([b[2] for b in batch])
            batch = []
            optimizer.zero_grad()
            logits = model(inputs)[:, 0]
            loss = hybrid_loss(logits, targets, detectors, loss_cfg)
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
        epoch_loss = float(np.mean(losses))
        val_iou = _validation_iou(model, val_samples, cfg.inference_gamma)
        log["epochs"].append({
            "epoch": epoch,
            "train_loss": epoch_loss,
            "val_iou": val_iou,
            "seconds": time.perf_counter() - start,
        })
        if val_iou > best_iou:
            best_iou = val_iou
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    if best_state is not None:
        model.load_state_dict(best_state)
    save_checkpoint(model, cfg, out_path)
    log["best_val_iou"] = best_iou
    if log_path is not None:
        with open(log_path, "w") as fh:
            json.dump(log, fh, indent=2)
    return log


def save_checkpoint(model, cfg: TrainConfig, path) -> None:
    """Atomic single-file checkpoint: header + adapters + head + base."""
    state = model.state_dict()
    adapters = {k: v for k, v in state.items() if "lora_A" in k or "lora_B" in k}
    head = {k: v for k, v in state.items() if k.startswith("head.")}
    base = {k: v for k, v in state.items() if k not in adapters and k not in head}
    payload = {
        "header": {
            "rank": cfg.rank,
            "lora_alpha": cfg.lora_alpha,
            "lora_dropout": cfg.lora_dropout,
            "backbone_id": BACKBONE_ID,
            "input_channels": 4,
            "inference_gamma": cfg.inference_gamma,
            "seed": cfg.seed,
        },
        "adapters": adapters,
        "head": head,
        "backbone": base,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            torch.save(payload, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path) -> tuple[torch.nn.Module, dict]:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    header = payload["header"]
    if header.get("backbone_id") != BACKBONE_ID:
        raise ValueError(f"checkpoint built for backbone {header.get('backbone_id')!r}, "
                         f"this build provides {BACKBONE_ID!r}")
    model = build_model(rank=header["rank"], lora_alpha=header["lora_alpha"],
                        lora_dropout=header.get("lora_dropout", 0.1),
                        in_channels=header["input_channels"], seed=header.get("seed", 0))
    state = {}
    state.update(payload["backbone"])
    state.update(payload["adapters"])
    state.update(payload["head"])
    model.load_state_dict(state)
    model.eval()
    return model, header
