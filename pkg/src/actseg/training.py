"""Training loop: seeded shuffling, gradient accumulation over whole
sequences, Adam updates, per-epoch loss history."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .data import SequenceSample
from .errors import ConfigError, InsufficientData
from .losses import LossConfig, combined_loss
from .optim import Adam, AdamConfig

PRECISIONS = {"single": torch.float32, "double": torch.float64}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 4
    learning_rate: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    precision: str = "double"

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.precision not in PRECISIONS:
            raise ConfigError(f"precision must be one of {sorted(PRECISIONS)}")

    def adam(self) -> AdamConfig:
        return AdamConfig(
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
        )


def _sample_tensors(sample: SequenceSample, dtype):
    x = torch.as_tensor(sample.features, dtype=dtype)
    y = torch.as_tensor(sample.labels, dtype=torch.long)
    return x, y


def train_model(
    model: torch.nn.Module,
    samples: list[SequenceSample],
    loss_cfg: LossConfig,
    train_cfg: TrainConfig,
    epoch_callback=None,
) -> list[dict]:
    """Train in place; returns per-epoch history rows.

    ``batch_size`` is realized as gradient accumulation over whole sequences
    (losses averaged before one Adam step). ``epoch_callback(model, epoch,
    row)`` may return True to stop early. Fully deterministic given seed.
    """
    if not samples:
        raise InsufficientData("empty training set")
    dtype = PRECISIONS[train_cfg.precision]
    model.to(dtype)
    # single-threaded so gradient reductions are order-fixed run to run
    prev_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    torch.manual_seed(train_cfg.seed)
    try:
        rng = np.random.default_rng(train_cfg.seed)
        optimizer = Adam(model, train_cfg.adam())
        history: list[dict] = []
        for epoch in range(1, train_cfg.epochs + 1):
            order = rng.permutation(len(samples))
            model.train()
            sum_total = sum_ce = sum_mse = 0.0
            n_batches = 0
            for start in range(0, len(order), train_cfg.batch_size):
                group = order[start : start + train_cfg.batch_size]
                optimizer.zero_grad()
                batch_loss = None
                for idx in group:
                    x, y = _sample_tensors(samples[int(idx)], dtype)
                    outputs = model(x)
                    loss, parts = combined_loss(outputs.stage_logits, y, loss_cfg)
                    batch_loss = loss if batch_loss is None else batch_loss + loss
                    sum_ce += parts["ce"]
                    sum_mse += parts["mse"]
                    sum_total += float(loss.detach())
                (batch_loss / len(group)).backward()
                optimizer.step()
                n_batches += 1
            n = len(samples)
            row = {
                "epoch": epoch,
                "loss": sum_total / n,
                "ce": sum_ce / n,
                "mse": sum_mse / n,
            }
            history.append(row)
            if epoch_callback is not None and epoch_callback(model, epoch, row):
                break
        model.eval()
        return history
    finally:
        torch.set_num_threads(prev_threads)


def predict_labels(model: torch.nn.Module, sample: SequenceSample) -> np.ndarray:
    """Argmax of the final stage's logits, dropout off."""
    model.eval()
    dtype = next(model.parameters()).dtype
    with torch.no_grad():
        x, _ = _sample_tensors(sample, dtype)
        outputs = model(x)
    return outputs.final_logits.argmax(dim=-1).cpu().numpy()


def write_history(history: list[dict], path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="ascii") as fh:
        writer = csv.DictWriter(fh, fieldnames=["epoch", "loss", "ce", "mse"])
        writer.writeheader()
        for row in history:
            writer.writerow({k: format(v, ".17g") if isinstance(v, float) else v for k, v in row.items()})
