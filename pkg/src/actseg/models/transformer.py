"""Encoder-only transformer emitting per-frame logits.

There is deliberately no positional encoding anywhere: the forward pass is
exactly equivariant under any permutation of the frames, and the tests pin
that down numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import ConfigError, ShapeError
from .common import StageOutputs, seeded_init


@dataclass(frozen=True)
class TransformerConfig:
    num_classes: int
    input_size: int  # V * C
    model_dim: int = 64
    num_heads: int = 4
    num_layers: int = 2
    feedforward_dim: int = 128
    dropout_rate: float = 0.0

    def __post_init__(self):
        if self.model_dim % self.num_heads != 0:
            raise ConfigError(
                f"model_dim {self.model_dim} not divisible by {self.num_heads} heads"
            )
        if self.num_layers < 1:
            raise ConfigError(f"need >= 1 layer, got {self.num_layers}")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")


def scaled_dot_attention(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor):
    """softmax(Q K^T / sqrt(d)) V; returns (output, row-stochastic weights)."""
    if q.shape[-1] == 0:
        raise ShapeError("attention head dimension is zero")
    if q.shape != k.shape or q.shape[0] != v.shape[0]:
        raise ShapeError(
            f"incompatible attention shapes {tuple(q.shape)}, {tuple(k.shape)},"
            f" {tuple(v.shape)}"
        )
    scores = (q @ k.T) / (q.shape[-1] ** 0.5)
    weights = torch.softmax(scores, dim=-1)
    return weights @ v, weights


class MultiHeadAttention(nn.Module):
    def __init__(self, model_dim, num_heads):
        super().__init__()
        self.num_heads = num_heads
        self.head_dim = model_dim // num_heads
        self.q_proj = nn.Linear(model_dim, model_dim)
        self.k_proj = nn.Linear(model_dim, model_dim)
        self.v_proj = nn.Linear(model_dim, model_dim)
        self.out_proj = nn.Linear(model_dim, model_dim)

    def forward(self, x: torch.Tensor):
        t = x.shape[0]
        d = self.head_dim
        q, k, v = self.q_proj(x), self.k_proj(x), self.v_proj(x)
        outputs = []
        weights = []
        for h in range(self.num_heads):
            sl = slice(h * d, (h + 1) * d)
            out, w = scaled_dot_attention(q[:, sl], k[:, sl], v[:, sl])
            outputs.append(out)
            weights.append(w)
        return self.out_proj(torch.cat(outputs, dim=1)), torch.stack(weights)


class EncoderLayer(nn.Module):
    """Pre-norm block: x + MHA(LN(x)), then x + FF(LN(x))."""

    def __init__(self, cfg: TransformerConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.model_dim)
        self.attention = MultiHeadAttention(cfg.model_dim, cfg.num_heads)
        self.norm2 = nn.LayerNorm(cfg.model_dim)
        self.ff1 = nn.Linear(cfg.model_dim, cfg.feedforward_dim)
        self.ff2 = nn.Linear(cfg.feedforward_dim, cfg.model_dim)
        self.dropout = nn.Dropout(cfg.dropout_rate)

    def forward(self, x: torch.Tensor):
        attn_out, weights = self.attention(self.norm1(x))
        x = x + self.dropout(attn_out)
        x = x + self.dropout(self.ff2(F.relu(self.ff1(self.norm2(x)))))
        return x, weights


class TransformerModel(nn.Module):
    model_type = "transformer"

    def __init__(self, cfg: TransformerConfig, seed: int = 0):
        super().__init__()
        self.cfg = cfg
        self.seed = int(seed)
        self.input_proj = nn.Linear(cfg.input_size, cfg.model_dim)
        self.layers = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.num_layers))
        self.head = nn.Linear(cfg.model_dim, cfg.num_classes)
        self.double()
        seeded_init(self, seed)

    def forward(self, x: torch.Tensor, collect_attention: bool = False):
        if x.ndim == 3:
            x = x.reshape(x.shape[0], -1)  # (T, V, C) -> (T, V*C)
        if x.ndim != 2 or x.shape[1] != self.cfg.input_size:
            raise ShapeError(
                f"expected (T, {self.cfg.input_size}) input, got {tuple(x.shape)}"
            )
        h = self.input_proj(x)
        attention = []
        for layer in self.layers:
            h, weights = layer(h)
            if collect_attention:
                attention.append(weights)
        logits = self.head(h)
        outputs = StageOutputs(stage_logits=[logits], frame_features=h)
        if collect_attention:
            return outputs, attention
        return outputs
