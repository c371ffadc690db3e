"""Training objectives: per-stage cross-entropy, probability-MSE, combined loss.

All functions take torch tensors and stay differentiable; tests feed numpy
arrays through ``torch.as_tensor`` and read scalars back with ``.item()``.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .errors import ConfigError, EmptyInput, ShapeError

LOG_FLOOR = 1e-12

SMOOTHING_MODES = ("plain_mse", "truncated_adjacent")


@dataclass(frozen=True)
class LossConfig:
    mse_weight: float = 0.15
    smoothing_mode: str = "plain_mse"
    truncation: float = 4.0
    mse_final_stage_only: bool = False
    # stop-gradient through the previous frame in truncated_adjacent mode;
    # off by default so analytic gradients equal finite differences
    detach_previous: bool = False

    def __post_init__(self):
        if self.mse_weight < 0:
            raise ConfigError(f"mse_weight must be >= 0, got {self.mse_weight}")
        if self.smoothing_mode not in SMOOTHING_MODES:
            raise ConfigError(f"unknown smoothing_mode {self.smoothing_mode!r}")
        if self.truncation <= 0:
            raise ConfigError(f"truncation must be > 0, got {self.truncation}")


def softmax(logits) -> torch.Tensor:
    """Rowwise softmax with max-subtraction; rows sum to 1."""
    logits = torch.as_tensor(logits)
    shifted = logits - logits.max(dim=-1, keepdim=True).values
    e = torch.exp(shifted)
    return e / e.sum(dim=-1, keepdim=True)


def framewise_cross_entropy(probs, labels) -> torch.Tensor:
    probs = torch.as_tensor(probs)
    labels = torch.as_tensor(labels, dtype=torch.long)
    if probs.shape[0] == 0:
        raise EmptyInput("cross-entropy over zero frames")
    if labels.shape[0] != probs.shape[0]:
        raise ShapeError(f"{probs.shape[0]} prob rows vs {labels.shape[0]} labels")
    picked = probs.gather(1, labels.view(-1, 1)).squeeze(1)
    return -torch.log(picked.clamp_min(LOG_FLOOR)).mean()


def multi_stage_cross_entropy(stage_probs, labels) -> torch.Tensor:
    """Unweighted sum of per-stage framewise cross-entropies."""
    stage_probs = list(stage_probs)
    if not stage_probs:
        raise EmptyInput("no stages")
    total = framewise_cross_entropy(stage_probs[0], labels)
    for probs in stage_probs[1:]:
        total = total + framewise_cross_entropy(probs, labels)
    return total


def mse_probability_loss(probs, labels, cfg: LossConfig | None = None) -> torch.Tensor:
    cfg = cfg or LossConfig()
    probs = torch.as_tensor(probs)
    labels = torch.as_tensor(labels, dtype=torch.long)
    if probs.shape[0] == 0:
        raise EmptyInput("MSE over zero frames")
    if labels.shape[0] != probs.shape[0]:
        raise ShapeError(f"{probs.shape[0]} prob rows vs {labels.shape[0]} labels")
    if cfg.smoothing_mode == "plain_mse":
        target = torch.zeros_like(probs)
        target[torch.arange(probs.shape[0]), labels] = 1.0
        return ((target - probs) ** 2).mean()
    # truncated_adjacent: penalize log-probability jumps between consecutive
    # frames, clamped at the truncation; min(|d|, tau)^2 == min(d^2, tau^2)
    log_p = torch.log(probs.clamp_min(LOG_FLOOR))
    if probs.shape[0] < 2:
        return torch.zeros((), dtype=probs.dtype)
    prev = log_p[:-1].detach() if cfg.detach_previous else log_p[:-1]
    diff = log_p[1:] - prev
    return (diff * diff).clamp_max(cfg.truncation**2).mean()


def combined_loss(stage_logits, labels, cfg: LossConfig):
    """Sum over stages of CE + weight * MSE on softmaxed logits.

    Returns (total, breakdown) where breakdown reports the CE and MSE sums
    separately as detached floats.
    """
    stage_logits = list(stage_logits)
    if not stage_logits:
        raise EmptyInput("no stages")
    labels = torch.as_tensor(labels, dtype=torch.long)
    ce_sum = None
    mse_sum = None
    last = len(stage_logits) - 1
    for s, logits in enumerate(stage_logits):
        probs = softmax(logits)
        ce = framewise_cross_entropy(probs, labels)
        ce_sum = ce if ce_sum is None else ce_sum + ce
        if cfg.mse_final_stage_only and s != last:
            continue
        mse = mse_probability_loss(probs, labels, cfg)
        mse_sum = mse if mse_sum is None else mse_sum + mse
    total = ce_sum if mse_sum is None else ce_sum + cfg.mse_weight * mse_sum
    breakdown = {
        "ce": float(ce_sum.detach()),
        "mse": 0.0 if mse_sum is None else float(mse_sum.detach()),
    }
    return total, breakdown
