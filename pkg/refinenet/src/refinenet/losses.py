"""Detector-guided training objective.

The detector mask m enters the objective twice:

* a spatial weighting map ``w = m + alpha * (1 - m)`` concentrates the
  cross-entropy on detector-activated pixels while leaving a small
  gradient floor elsewhere;
* a guided logit ``p~ = p + gamma * m`` biases the crack logit toward
  positive inside detector regions during training.

The full loss is weighted binary cross-entropy on the guided logits
plus ``dice_weight`` times a soft Dice loss on the raw-probability
masks (smoothing term 1 in numerator and denominator). The crack head
is a single logit; "argmax over {background, crack}" is the p~ > 0
decision.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

__all__ = ["LossConfig", "weighting_map", "guided_logits", "dice_loss", "hybrid_loss"]


@dataclass
class LossConfig:
    gamma: float = 1.0         # guided-logit strength
    weight_floor: float = 0.01  # alpha: CE weight off the detector mask
    dice_weight: float = 2.0    # lambda: Dice term multiplier


def weighting_map(m: torch.Tensor, weight_floor: float) -> torch.Tensor:
    """w = m + alpha * (1 - m): 1 on detector pixels, alpha elsewhere."""
    return m + weight_floor * (1.0 - m)


def guided_logits(p: torch.Tensor, m: torch.Tensor, gamma: float) -> torch.Tensor:
    """p~ = p + gamma * m."""
    if p.shape != m.shape:
        raise ValueError(f"logit/mask shape mismatch: {tuple(p.shape)} vs {tuple(m.shape)}")
    return p + gamma * m


def dice_loss(p: torch.Tensor, y: torch.Tensor, smooth: float = 1.0) -> torch.Tensor:
    """1 - (2 |P.Y| + s) / (|P| + |Y| + s) on sigmoid probabilities."""
    prob = torch.sigmoid(p)
    intersection = (prob * y).sum()
    return 1.0 - (2.0 * intersection + smooth) / (prob.sum() + y.sum() + smooth)


def hybrid_loss(p: torch.Tensor, y: torch.Tensor, m: torch.Tensor,
                cfg: LossConfig | None = None) -> torch.Tensor:
    """Weighted CE on guided logits plus the Dice term.

    ``p`` are raw crack logits, ``y`` binary targets, ``m`` the binary
    detector mask; all same shape. The CE term is the plain mean of the
    per-pixel weighted contributions.
    """
    if cfg is None:
        cfg = LossConfig()
    if y.shape != p.shape or m.shape != p.shape:
        raise ValueError("p, y and m must share a shape")
    guided = guided_logits(p, m, cfg.gamma)
    weights = weighting_map(m, cfg.weight_floor)
    ce = F.binary_cross_entropy_with_logits(guided, y, reduction="none")
    return (weights * ce).mean() + cfg.dice_weight * dice_loss(p, y)
