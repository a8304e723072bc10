"""Low-rank adaptation of linear projections.

Each adapted weight keeps its frozen base matrix W and learns a
low-rank update: W' = W + (alpha / r) * B @ A, with A (r x d_in) drawn
from a small Gaussian and B (d_out x r) zero-initialized, so the
adapted model starts exactly at the base function.
"""

from __future__ import annotations

import math

import torch
from torch import nn

__all__ = ["LoraLinear", "merge_lora", "inject_lora", "lora_parameters"]


def merge_lora(base: torch.Tensor, A: torch.Tensor, B: torch.Tensor,
               rank: int, alpha: float) -> torch.Tensor:
    """W' = W + (alpha / rank) * B @ A, with shape validation."""
    if A.shape[0] != rank or B.shape[1] != rank:
        raise ValueError(f"adapter rank mismatch: A {tuple(A.shape)}, B {tuple(B.shape)}, rank {rank}")
    if B.shape[0] != base.shape[0] or A.shape[1] != base.shape[1]:
        raise ValueError(
            f"adapter shapes {tuple(B.shape)}x{tuple(A.shape)} do not match base {tuple(base.shape)}"
        )
    return base + (alpha / rank) * (B @ A)


class LoraLinear(nn.Module):
    """nn.Linear wrapper with a trainable low-rank bypass.

    The wrapped layer's weight and bias are frozen; only lora_A and
    lora_B train. Dropout applies to the bypass input only.
    """

    def __init__(self, base: nn.Linear, rank: int = 8, alpha: float = 16.0,
                 dropout: float = 0.1):
        super().__init__()
        self.base = base
        self.base.weight.requires_grad_(False)
        if self.base.bias is not None:
            self.base.bias.requires_grad_(False)
        self.rank = rank
        self.alpha = alpha
        self.scaling = alpha / rank
        self.lora_A = nn.Parameter(torch.empty(rank, base.in_features))
        self.lora_B = nn.Parameter(torch.zeros(base.out_features, rank))
        nn.init.normal_(self.lora_A, std=1.0 / math.sqrt(base.in_features))
        self.dropout = nn.Dropout(dropout) if dropout > 0 else nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        update = self.dropout(x) @ self.lora_A.t() @ self.lora_B.t()
        return self.base(x) + self.scaling * update

    def merged_weight(self) -> torch.Tensor:
        return merge_lora(self.base.weight, self.lora_A, self.lora_B,
                          self.rank, self.alpha)


def inject_lora(module: nn.Module, rank: int = 8, alpha: float = 16.0,
                dropout: float = 0.1, target_suffixes: tuple[str, ...] = ()) -> int:
    """Replace matching nn.Linear children with LoraLinear, recursively.

    ``target_suffixes`` filters by attribute name (empty = every Linear).
    Returns the number of layers adapted.
    """
    count = 0
    for name, child in list(module.named_children()):
        if isinstance(child, nn.Linear) and (not target_suffixes or name in target_suffixes):
            setattr(module, name, LoraLinear(child, rank=rank, alpha=alpha, dropout=dropout))
            count += 1
        else:
            count += inject_lora(child, rank, alpha, dropout, target_suffixes)
    return count


def lora_parameters(module: nn.Module):
    for name, param in module.named_parameters():
        if "lora_A" in name or "lora_B" in name:
            yield param
