"""Desk-scale hierarchical transformer for crack-mask refinement.

A three-stage encoder (overlapping patch embeddings, efficient
self-attention with spatial reduction, mix-FFNs with a depthwise conv)
feeds an all-MLP decode head that fuses the pyramid at the finest
stride and predicts a single crack logit per pixel. The input stem
takes four channels: normalized RGB plus the binary detector mask.

For fine-tuning, the whole encoder (including embeddings and norms) is
frozen; low-rank adapters on the attention and feed-forward projections
plus the decode head are the only trainable parts.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .lora import inject_lora

__all__ = ["RefineNet", "build_model", "trainable_parameters", "BACKBONE_ID"]

BACKBONE_ID = "tiny-hvt-16-32-64"

_DIMS = (16, 32, 64)
_HEADS = (1, 2, 4)
_SR = (4, 2, 1)
_DEPTHS = (1, 1, 2)
_EMBED = 32
_LORA_TARGETS = ("q", "kv", "proj", "fc1", "fc2")


class OverlapPatchEmbed(nn.Module):
    def __init__(self, in_ch, dim, kernel, stride):
        super().__init__()
        self.conv = nn.Conv2d(in_ch, dim, kernel, stride, padding=kernel // 2)
        self.norm = nn.LayerNorm(dim)

    def forward(self, x):
        x = self.conv(x)
        _, _, h, w = x.shape
        x = x.flatten(2).transpose(1, 2)  # B, N, C
        return self.norm(x), h, w


class SpatialReductionAttention(nn.Module):
    def __init__(self, dim, heads, sr_ratio):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.scale = self.head_dim ** -0.5
        self.q = nn.Linear(dim, dim)
        self.kv = nn.Linear(dim, 2 * dim)
        self.proj = nn.Linear(dim, dim)
        self.sr_ratio = sr_ratio
        if sr_ratio > 1:
            self.sr = nn.Conv2d(dim, dim, sr_ratio, sr_ratio)
            self.sr_norm = nn.LayerNorm(dim)

    def forward(self, x, h, w):
        b, n, c = x.shape
        q = self.q(x).reshape(b, n, self.heads, self.head_dim).transpose(1, 2)
        if self.sr_ratio > 1:
            grid = x.transpose(1, 2).reshape(b, c, h, w)
            grid = self.sr(grid).flatten(2).transpose(1, 2)
            kv_input = self.sr_norm(grid)
        else:
            kv_input = x
        kv = self.kv(kv_input)
        m = kv.shape[1]
        kv = kv.reshape(b, m, 2, self.heads, self.head_dim).permute(2, 0, 3, 1, 4)
        k, v = kv[0], kv[1]
        attn = (q @ k.transpose(-2, -1)) * self.scale
        attn = attn.softmax(dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, n, c)
        return self.proj(out)


class MixFFN(nn.Module):
    def __init__(self, dim, expansion=4):
        super().__init__()
        hidden = dim * expansion
        self.fc1 = nn.Linear(dim, hidden)
        self.dwconv = nn.Conv2d(hidden, hidden, 3, padding=1, groups=hidden)
        self.fc2 = nn.Linear(hidden, dim)

    def forward(self, x, h, w):
        x = self.fc1(x)
        b, n, c = x.shape
        x = x.transpose(1, 2).reshape(b, c, h, w)
        x = self.dwconv(x)
        x = x.flatten(2).transpose(1, 2)
        return self.fc2(F.gelu(x))


class Block(nn.Module):
    def __init__(self, dim, heads, sr_ratio):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = SpatialReductionAttention(dim, heads, sr_ratio)
        self.norm2 = nn.LayerNorm(dim)
        self.ffn = MixFFN(dim)

    def forward(self, x, h, w):
        x = x + self.attn(self.norm1(x), h, w)
        x = x + self.ffn(self.norm2(x), h, w)
        return x


class DecodeHead(nn.Module):
    """Per-stage linear projections fused at the finest stride."""

    def __init__(self, dims, embed):
        super().__init__()
        self.projections = nn.ModuleList([nn.Linear(d, embed) for d in dims])
        self.fuse = nn.Conv2d(embed * len(dims), embed, 1)
        self.classify = nn.Conv2d(embed, 1, 1)
        # cracks are sparse: start from a confident "background" prior
        nn.init.constant_(self.classify.bias, -2.0)

    def forward(self, features, target_hw):
        planes = []
        for proj, (x, h, w) in zip(self.projections, features):
            b, _, _ = x.shape
            plane = proj(x).transpose(1, 2).reshape(b, -1, h, w)
            if (h, w) != target_hw:
                plane = F.interpolate(plane, size=target_hw, mode="bilinear",
                                      align_corners=False)
            planes.append(plane)
        fused = F.relu(self.fuse(torch.cat(planes, dim=1)))
        return self.classify(fused)


class RefineNet(nn.Module):
    def __init__(self, in_channels: int = 4):
        super().__init__()
        self.in_channels = in_channels
        self.embeds = nn.ModuleList()
        self.stages = nn.ModuleList()
        prev = in_channels
        for i, dim in enumerate(_DIMS):
            kernel = 7 if i == 0 else 3
            self.embeds.append(OverlapPatchEmbed(prev, dim, kernel, stride=2))
            self.stages.append(nn.ModuleList(
                Block(dim, _HEADS[i], _SR[i]) for _ in range(_DEPTHS[i])
            ))
            prev = dim
        self.head = DecodeHead(_DIMS, _EMBED)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """x: (B, 4, H, W) -> crack logits (B, 1, H, W)."""
        b, _, h, w = x.shape
        # pad to a multiple of the total stride, crop the logits back
        stride = 2 ** len(_DIMS)
        ph = (stride - h % stride) % stride
        pw = (stride - w % stride) % stride
        if ph or pw:
            x = F.pad(x, (0, pw, 0, ph), mode="replicate")
        features = []
        out = x
        hw = None
        for embed, blocks in zip(self.embeds, self.stages):
            if features:
                prev_x, prev_h, prev_w = features[-1]
                out = prev_x.transpose(1, 2).reshape(b, -1, prev_h, prev_w)
            out, fh, fw = embed(out)
            for block in blocks:
                out = block(out, fh, fw)
            features.append((out, fh, fw))
            hw = (features[0][1], features[0][2])
        logits = self.head(features, hw)
        logits = F.interpolate(logits, size=(x.shape[2], x.shape[3]),
                               mode="bilinear", align_corners=False)
        return logits[:, :, :h, :w]


def build_model(rank: int = 8, lora_alpha: float = 16.0, lora_dropout: float = 0.1,
                in_channels: int = 4, seed: int = 0) -> RefineNet:
    """Deterministically initialized backbone with adapters injected.

    Everything except the adapters and the decode head is frozen.
    """
    torch.manual_seed(seed)
    model = RefineNet(in_channels=in_channels)
    for param in model.parameters():
        param.requires_grad_(False)
    adapted = inject_lora(model, rank=rank, alpha=lora_alpha, dropout=lora_dropout,
                          target_suffixes=_LORA_TARGETS)
    assert adapted > 0
    for param in model.head.parameters():
        param.requires_grad_(True)
    return model


def trainable_parameters(model: nn.Module):
    return [p for p in model.parameters() if p.requires_grad]
