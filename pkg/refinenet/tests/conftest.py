"""Toy corpus fixtures, built through the restoration toolkit's CLI.

The refinement package consumes the primary toolkit only through its
external interfaces, so these fixtures synthesize stand-in paintings
locally, then shell out to ``craquelure generate`` and ``craquelure
detect`` to produce the dataset layout and detector masks, and finally
train the toy checkpoint once per session.
"""

from __future__ import annotations

import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

TARGET = (299, 188)
SCALE = 3.6


def daub_painting(seed: int, target_wh=TARGET, scale=SCALE) -> np.ndarray:
    """Bright-daubed canvas, sized ``scale`` times the delivery target."""
    rng = np.random.default_rng(seed)
    wt, ht = target_wh
    w, h = int(round(wt * scale)), int(round(ht * scale))
    spacing, radius = 2.6 * scale, 1.15 * scale
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    daubs = np.zeros((h, w), dtype=bool)
    for cy in np.arange(0.0, h + spacing, spacing):
        jx = rng.uniform(-0.35 * spacing, 0.35 * spacing, int(w / spacing) + 2)
        jy = cy + rng.uniform(-0.35 * spacing, 0.35 * spacing, int(w / spacing) + 2)
        for j, cx in enumerate(np.arange(0.0, w + spacing, spacing)[: len(jx)]):
            px, py = cx + jx[j], jy[j]
            x0, x1 = int(max(px - radius - 1, 0)), int(min(px + radius + 2, w))
            y0, y1 = int(max(py - radius - 1, 0)), int(min(py + radius + 2, h))
            if x0 >= x1 or y0 >= y1:
                continue
            window = (xx[y0:y1, x0:x1] - px) ** 2 + (yy[y0:y1, x0:x1] - py) ** 2
            daubs[y0:y1, x0:x1] |= window <= radius * radius
    img = np.empty((h, w, 3), dtype=np.float64)
    for c in range(3):
        lowfreq = np.zeros((h, w))
        for _ in range(2):
            fx, fy = rng.uniform(0.4, 1.8, 2)
            lowfreq += rng.uniform(2, 5) * np.sin(
                2 * math.pi * (fx * xx / w + fy * yy / h) + rng.uniform(0, 2 * math.pi)
            )
        img[:, :, c] = np.where(daubs, 246 + rng.uniform(-3, 3),
                                158 + rng.uniform(-4, 4) + lowfreq)
    return np.clip(np.floor(img + 0.5), 70, 252).astype(np.uint8)


def run_cli(*args) -> None:
    proc = subprocess.run([sys.executable, "-m", "craquelure.cli", *map(str, args)],
                          capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"craquelure {' '.join(map(str, args))} failed:\n{proc.stderr}")


def build_dataset(root: Path, n_images: int, master_seed: int) -> Path:
    sources = root / "sources"
    sources.mkdir(parents=True)
    for i in range(n_images):
        Image.fromarray(daub_painting(master_seed * 1000 + i)).save(
            sources / f"art{i:02d}.png"
        )
    config = root / "run.toml"
    config.write_text(f"[generate]\ntarget_size = [{TARGET[0]}, {TARGET[1]}]\n")
    dataset = root / "dataset"
    run_cli("generate", "--source", sources, "--out", dataset,
            "--seed", master_seed, "--config", config)
    damaged = sorted((dataset / "damaged").glob("*.png"))
    run_cli("detect", *damaged, "--out", dataset / "detector")
    return dataset


@pytest.fixture(scope="session")
def train_corpus(tmp_path_factory) -> Path:
    """20 triplets with detector masks, for adapter training."""
    return build_dataset(tmp_path_factory.mktemp("train-corpus"), 20, 77)


@pytest.fixture(scope="session")
def heldout_corpus(tmp_path_factory) -> Path:
    """5 unseen triplets with detector masks, for evaluation."""
    return build_dataset(tmp_path_factory.mktemp("heldout-corpus"), 5, 88)


@pytest.fixture(scope="session")
def toy_training(train_corpus, tmp_path_factory):
    """The S3 training run: 5 epochs on the 20-triplet corpus."""
    from refinenet.train import TrainConfig, train

    out_dir = tmp_path_factory.mktemp("checkpoint")
    ckpt = out_dir / "refiner.pt"
    cfg = TrainConfig(epochs=5, patience=5, seed=0)
    log = train(train_corpus, train_corpus / "detector", ckpt,
                cfg, log_path=out_dir / "log.json")
    return ckpt, log
