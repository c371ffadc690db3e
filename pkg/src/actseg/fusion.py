"""Last-layer feature fusion and the fully connected frame classifier.

Frame features from the trained graph model and transformer are concatenated
per frame and classified by batch norm -> dense+ReLU -> flatten (a per-frame
no-op) -> dense. The source models stay frozen.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .checkpoint import load_checkpoint
from .data import DatasetMeta, SequenceSample
from .errors import (
    CompatibilityError,
    ConfigError,
    EmptyInput,
    FormatError,
    InsufficientData,
    ShapeError,
)
from .losses import framewise_cross_entropy, softmax
from .models.common import seeded_init
from .optim import Adam
from .training import PRECISIONS, TrainConfig


@dataclass(frozen=True)
class FusionClassifierConfig:
    input_width: int
    num_classes: int
    hidden_width: int = 64
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1

    def __post_init__(self):
        if self.input_width <= 0 or self.hidden_width <= 0:
            raise ConfigError("widths must be positive")


@dataclass
class FusedFeatureSet:
    """Per-sample fused frame features (T x W) with labels and provenance."""

    features: list[np.ndarray]
    labels: list[np.ndarray]
    sample_ids: list[str]
    num_classes: int
    provenance: dict

    def __post_init__(self):
        for f, l in zip(self.features, self.labels):
            if f.shape[0] != l.shape[0]:
                raise ShapeError(
                    f"{f.shape[0]} feature rows vs {l.shape[0]} labels"
                )

    @property
    def width(self) -> int:
        return self.features[0].shape[1] if self.features else 0


class FusionClassifier(nn.Module):
    model_type = "fusion"

    def __init__(self, cfg: FusionClassifierConfig, seed: int = 0):
        super().__init__()
        self.cfg = cfg
        self.seed = int(seed)
        self.bn = nn.BatchNorm1d(
            cfg.input_width, eps=cfg.bn_eps, momentum=cfg.bn_momentum
        )
        self.hidden = nn.Linear(cfg.input_width, cfg.hidden_width)
        self.out = nn.Linear(cfg.hidden_width, cfg.num_classes)
        self.double()
        seeded_init(self, seed)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 2 or x.shape[1] != self.cfg.input_width:
            raise ShapeError(
                f"expected (N, {self.cfg.input_width}) input, got {tuple(x.shape)}"
            )
        h = self.bn(x)
        h = F.relu(self.hidden(h))
        h = torch.flatten(h, start_dim=1)  # per-frame vectors are already flat
        return self.out(h)


def concat_features(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"{a.shape[0]} frames vs {b.shape[0]} frames")
    return np.hstack([a, b])


def _check_model_compat(model, meta: DatasetMeta) -> None:
    if model.model_type == "pomsgcn":
        if model.graph.num_joints != meta.num_joints:
            raise CompatibilityError(
                f"checkpoint expects {model.graph.num_joints} joints,"
                f" dataset has {meta.num_joints}"
            )
        if model.cfg.in_channels != meta.channels:
            raise CompatibilityError(
                f"checkpoint expects {model.cfg.in_channels} channels,"
                f" dataset has {meta.channels}"
            )
    elif model.model_type == "transformer":
        if model.cfg.input_size != meta.num_joints * meta.channels:
            raise CompatibilityError(
                f"checkpoint expects input size {model.cfg.input_size},"
                f" dataset has {meta.num_joints * meta.channels}"
            )
    if model.cfg.num_classes != meta.num_classes:
        raise CompatibilityError(
            f"checkpoint trained for {model.cfg.num_classes} classes,"
            f" dataset has {meta.num_classes}"
        )


def _masked(sample: SequenceSample, channel_mask) -> np.ndarray:
    if channel_mask is None:
        return sample.features
    feats = sample.features.copy()
    keep = np.zeros(feats.shape[2], dtype=bool)
    keep[list(channel_mask)] = True
    feats[:, :, ~keep] = 0.0
    return feats


def extract_fused_dataset(
    pomsgcn_checkpoint,
    transformer_checkpoint,
    samples: list[SequenceSample],
    meta: DatasetMeta,
    pomsgcn_channels=None,
    transformer_channels=None,
) -> FusedFeatureSet:
    """Run both frozen models and concatenate their last-layer frame features.

    Optional channel lists restrict what each model sees (other channels are
    zeroed), matching how the checkpoints were trained.
    """
    model_a, manifest_a = load_checkpoint(pomsgcn_checkpoint)
    model_b, manifest_b = load_checkpoint(transformer_checkpoint)
    if model_a.model_type != "pomsgcn" or model_b.model_type != "transformer":
        raise CompatibilityError(
            f"expected (pomsgcn, transformer) checkpoints, got"
            f" ({model_a.model_type}, {model_b.model_type})"
        )
    _check_model_compat(model_a, meta)
    _check_model_compat(model_b, meta)
    dtype_a = next(model_a.parameters()).dtype
    dtype_b = next(model_b.parameters()).dtype
    features = []
    labels = []
    ids = []
    with torch.no_grad():
        for sample in samples:
            if sample.num_frames == 0:
                raise EmptyInput(f"sample {sample.sample_id!r} has zero frames")
            xa = torch.as_tensor(_masked(sample, pomsgcn_channels), dtype=dtype_a)
            xb = torch.as_tensor(_masked(sample, transformer_channels), dtype=dtype_b)
            fa = model_a(xa).frame_features.cpu().numpy()
            fb = model_b(xb).frame_features.cpu().numpy()
            features.append(concat_features(fa, fb))
            labels.append(sample.labels.copy())
            ids.append(sample.sample_id)
    provenance = {
        "pomsgcn": str(pomsgcn_checkpoint),
        "transformer": str(transformer_checkpoint),
    }
    return FusedFeatureSet(
        features=features,
        labels=labels,
        sample_ids=ids,
        num_classes=meta.num_classes,
        provenance=provenance,
    )


def save_fused_dataset(fused: FusedFeatureSet, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "provenance.json").write_text(
        json.dumps(
            {"num_classes": fused.num_classes, **fused.provenance}, indent=2
        )
        + "\n",
        encoding="utf-8",
    )
    for sample_id, feats, labels in zip(fused.sample_ids, fused.features, fused.labels):
        d = out_dir / sample_id
        d.mkdir(parents=True, exist_ok=True)
        lines = [",".join(format(x, ".17g") for x in row) for row in feats]
        (d / "fused_features.csv").write_text(
            "".join(line + "\n" for line in lines), encoding="ascii"
        )
        (d / "labels.csv").write_text(
            "".join(f"{int(x)}\n" for x in labels), encoding="ascii"
        )


def load_fused_dataset(directory) -> FusedFeatureSet:
    directory = Path(directory)
    prov_path = directory / "provenance.json"
    if not prov_path.exists():
        raise FormatError(f"missing {prov_path}")
    prov = json.loads(prov_path.read_text(encoding="utf-8"))
    num_classes = int(prov.pop("num_classes"))
    features = []
    labels = []
    ids = []
    for d in sorted(p for p in directory.iterdir() if p.is_dir()):
        feat_path = d / "fused_features.csv"
        if not feat_path.exists():
            continue
        features.append(np.loadtxt(feat_path, delimiter=",", ndmin=2))
        labels.append(np.loadtxt(d / "labels.csv", dtype=np.int64, ndmin=1))
        ids.append(d.name)
    return FusedFeatureSet(
        features=features,
        labels=labels,
        sample_ids=ids,
        num_classes=num_classes,
        provenance=prov,
    )


def train_fusion(
    clf: FusionClassifier,
    train_set: FusedFeatureSet,
    train_cfg: TrainConfig,
) -> list[dict]:
    """Adam + framewise CE on frozen fused features; per-epoch loss and
    train accuracy in the history."""
    if not train_set.features:
        raise InsufficientData("empty fused training set")
    dtype = PRECISIONS[train_cfg.precision]
    clf.to(dtype)
    prev_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    torch.manual_seed(train_cfg.seed)
    try:
        rng = np.random.default_rng(train_cfg.seed)
        optimizer = Adam(clf, train_cfg.adam())
        history = []
        n = len(train_set.features)
        for epoch in range(1, train_cfg.epochs + 1):
            order = rng.permutation(n)
            clf.train()
            loss_sum = 0.0
            correct = 0
            total = 0
            for start in range(0, n, train_cfg.batch_size):
                group = order[start : start + train_cfg.batch_size]
                x = torch.as_tensor(
                    np.concatenate([train_set.features[int(i)] for i in group]),
                    dtype=dtype,
                )
                y = torch.as_tensor(
                    np.concatenate([train_set.labels[int(i)] for i in group]),
                    dtype=torch.long,
                )
                optimizer.zero_grad()
                logits = clf(x)
                loss = framewise_cross_entropy(softmax(logits), y)
                loss.backward()
                optimizer.step()
                loss_sum += float(loss.detach()) * len(group)
                correct += int((logits.argmax(dim=-1) == y).sum())
                total += int(y.shape[0])
            history.append(
                {
                    "epoch": epoch,
                    "loss": loss_sum / n,
                    "train_accuracy": correct / total,
                }
            )
        clf.eval()
        return history
    finally:
        torch.set_num_threads(prev_threads)


def predict_fusion(clf: FusionClassifier, features: np.ndarray) -> np.ndarray:
    clf.eval()
    dtype = next(clf.parameters()).dtype
    with torch.no_grad():
        logits = clf(torch.as_tensor(features, dtype=dtype))
    return logits.argmax(dim=-1).cpu().numpy()
