"""Canonical on-disk dataset format, temporal decimation, synthetic data, splits.

A sample directory holds ``features.csv`` (T rows, V*C columns, joint-major
column order), ``labels.csv`` (one integer per row) and ``meta.json``. A
dataset directory holds a top-level ``meta.json`` plus one such subdirectory
per sample.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateSequence,
    FormatError,
    InsufficientData,
    RangeError,
)

META_KEYS = ("num_classes", "num_joints", "channels", "class_names", "sampling_rate_hz")


@dataclass(frozen=True)
class DatasetMeta:
    num_classes: int
    num_joints: int
    channels: int
    class_names: tuple[str, ...]
    sampling_rate_hz: float

    def __post_init__(self):
        if len(self.class_names) != self.num_classes:
            raise FormatError(
                f"{self.num_classes} classes but {len(self.class_names)} class names"
            )
        if self.num_joints * self.channels <= 0:
            raise FormatError("num_joints * channels must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_names"] = list(self.class_names)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetMeta":
        missing = [k for k in META_KEYS if k not in d]
        if missing:
            raise FormatError(f"meta.json missing keys: {missing}")
        return cls(
            num_classes=int(d["num_classes"]),
            num_joints=int(d["num_joints"]),
            channels=int(d["channels"]),
            class_names=tuple(str(n) for n in d["class_names"]),
            sampling_rate_hz=float(d["sampling_rate_hz"]),
        )


@dataclass(frozen=True)
class SequenceSample:
    """One recording: features (T, V, C), labels (T,), both validated."""

    features: np.ndarray
    labels: np.ndarray
    sampling_rate_hz: float
    sample_id: str

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 3:
            raise FormatError(f"features must be T x V x C, got shape {feats.shape}")
        if labels.ndim != 1 or labels.shape[0] != feats.shape[0]:
            raise FormatError(
                f"labels length {labels.shape} does not match {feats.shape[0]} frames"
            )
        if not np.isfinite(feats).all():
            raise FormatError(f"non-finite feature value in sample {self.sample_id!r}")
        if labels.size and labels.min() < 0:
            raise FormatError(f"negative label in sample {self.sample_id!r}")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def num_frames(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class SyntheticConfig:
    num_classes: int = 5
    num_joints: int = 6
    channels: int = 3
    num_sequences: int = 20
    frames_per_sequence: int = 256
    min_segment_length: int = 16
    max_segment_length: int = 64
    noise_std: float = 0.1
    seed: int = 0
    sampling_rate_hz: float = 50.0

    def __post_init__(self):
        if self.min_segment_length < 1:
            raise FormatError("min_segment_length must be >= 1")
        if self.max_segment_length < self.min_segment_length:
            raise FormatError("max_segment_length < min_segment_length")
        if self.frames_per_sequence < self.min_segment_length:
            raise FormatError("frames_per_sequence < min_segment_length")


def load_sample(directory) -> SequenceSample:
    directory = Path(directory)
    meta = DatasetMeta.from_dict(_read_json(directory / "meta.json"))
    return _load_sample_with_meta(directory, meta)


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise FormatError(f"missing {path}") from e
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON in {path}: {e}") from e


def _load_sample_with_meta(directory: Path, meta: DatasetMeta) -> SequenceSample:
    feat_path = directory / "features.csv"
    label_path = directory / "labels.csv"
    for p in (feat_path, label_path):
        if not p.exists():
            raise FormatError(f"missing {p}")
    try:
        feats = np.loadtxt(feat_path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise FormatError(f"unparseable features in {feat_path}: {e}") from e
    try:
        labels = np.loadtxt(label_path, dtype=np.int64, ndmin=1)
    except ValueError as e:
        raise FormatError(f"unparseable labels in {label_path}: {e}") from e
    v, c = meta.num_joints, meta.channels
    if feats.shape[1] != v * c:
        raise FormatError(
            f"{feat_path}: expected {v * c} columns, got {feats.shape[1]}"
        )
    if feats.shape[0] != labels.shape[0]:
        raise FormatError(
            f"{directory}: {feats.shape[0]} feature rows vs {labels.shape[0]} labels"
        )
    if not np.isfinite(feats).all():
        raise FormatError(f"{feat_path}: non-finite value")
    if labels.size and (labels.min() < 0 or labels.max() >= meta.num_classes):
        raise FormatError(
            f"{label_path}: label outside [0, {meta.num_classes})"
        )
    # column j -> (joint j // C, channel j % C)
    features = feats.reshape(feats.shape[0], v, c)
    return SequenceSample(
        features=features,
        labels=labels,
        sampling_rate_hz=meta.sampling_rate_hz,
        sample_id=directory.name,
    )


def write_sample(sample: SequenceSample, directory, meta: DatasetMeta) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    t = sample.num_frames
    flat = sample.features.reshape(t, -1)
    lines = [",".join(format(x, ".17g") for x in row) for row in flat]
    (directory / "features.csv").write_text(
        "".join(line + "\n" for line in lines), encoding="ascii"
    )
    (directory / "labels.csv").write_text(
        "".join(f"{int(x)}\n" for x in sample.labels), encoding="ascii"
    )
    (directory / "meta.json").write_text(
        json.dumps(meta.to_dict(), indent=2) + "\n", encoding="utf-8"
    )


def write_dataset(samples, meta: DatasetMeta, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "meta.json").write_text(
        json.dumps(meta.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    for sample in samples:
        write_sample(sample, out_dir / sample.sample_id, meta)


def load_dataset(directory) -> tuple[list[SequenceSample], DatasetMeta]:
    directory = Path(directory)
    meta = DatasetMeta.from_dict(_read_json(directory / "meta.json"))
    sample_dirs = sorted(
        p for p in directory.iterdir() if p.is_dir() and (p / "features.csv").exists()
    )
    samples = [_load_sample_with_meta(p, meta) for p in sample_dirs]
    return samples, meta


def decimate(sample: SequenceSample, factor: int) -> SequenceSample:
    """Keep frames 0, factor, 2*factor, ...; metrics run at the decimated rate."""
    factor = int(factor)
    if factor < 1:
        raise DegenerateSequence(f"decimation factor must be >= 1, got {factor}")
    if factor == 1:
        return sample
    if factor >= sample.num_frames:
        raise DegenerateSequence(
            f"factor {factor} >= sequence length {sample.num_frames}"
        )
    return SequenceSample(
        features=sample.features[::factor].copy(),
        labels=sample.labels[::factor].copy(),
        sampling_rate_hz=sample.sampling_rate_hz / factor,
        sample_id=sample.sample_id,
    )


def one_hot(labels, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise RangeError(f"label outside [0, {num_classes})")
    out = np.zeros((labels.shape[0], num_classes), dtype=np.float64)
    if labels.size:
        out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def _class_signal_params(cfg: SyntheticConfig):
    """Per-class sinusoid parameters, drawn first so templates are reproducible."""
    rng = np.random.default_rng(cfg.seed)
    k, v, c = cfg.num_classes, cfg.num_joints, cfg.channels
    amplitudes = rng.uniform(0.5, 2.0, size=(k, v))
    freqs = rng.uniform(0.5, min(4.0, cfg.sampling_rate_hz / 4.0), size=k)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(k, v, c))
    return amplitudes, freqs, phases, rng


def class_templates(cfg: SyntheticConfig, num_frames: int | None = None) -> np.ndarray:
    """Noise-free class signals, shape (K, T, V, C); frame index is global time."""
    t = cfg.frames_per_sequence if num_frames is None else num_frames
    amplitudes, freqs, phases, _ = _class_signal_params(cfg)
    times = np.arange(t, dtype=np.float64) / cfg.sampling_rate_hz
    # (K, T, V, C)
    angle = (
        2.0 * np.pi * freqs[:, None, None, None] * times[None, :, None, None]
        + phases[:, None, :, :]
    )
    return amplitudes[:, None, :, None] * np.sin(angle)


def generate_synthetic(cfg: SyntheticConfig) -> tuple[list[SequenceSample], DatasetMeta]:
    amplitudes, freqs, phases, rng = _class_signal_params(cfg)
    templates = class_templates(cfg)
    meta = DatasetMeta(
        num_classes=cfg.num_classes,
        num_joints=cfg.num_joints,
        channels=cfg.channels,
        class_names=tuple(f"class_{k}" for k in range(cfg.num_classes)),
        sampling_rate_hz=cfg.sampling_rate_hz,
    )
    samples: list[SequenceSample] = []
    for i in range(cfg.num_sequences):
        labels = np.empty(cfg.frames_per_sequence, dtype=np.int64)
        pos = 0
        prev = -1
        while pos < cfg.frames_per_sequence:
            k = int(rng.integers(cfg.num_classes))
            if cfg.num_classes > 1:
                while k == prev:
                    k = int(rng.integers(cfg.num_classes))
            length = int(
                rng.integers(cfg.min_segment_length, cfg.max_segment_length + 1)
            )
            end = min(pos + length, cfg.frames_per_sequence)
            labels[pos:end] = k
            pos = end
            prev = k
        features = templates[labels, np.arange(cfg.frames_per_sequence)]
        if cfg.noise_std > 0:
            features = features + rng.normal(
                0.0, cfg.noise_std, size=features.shape
            )
        samples.append(
            SequenceSample(
                features=features,
                labels=labels,
                sampling_rate_hz=cfg.sampling_rate_hz,
                sample_id=f"synth_{i:03d}",
            )
        )
    return samples, meta


def split_dataset(samples, train_fraction: float, seed: int):
    if len(samples) < 2:
        raise InsufficientData(f"need >= 2 samples to split, got {len(samples)}")
    if not (0.0 < train_fraction < 1.0):
        raise InsufficientData(f"train_fraction must be in (0, 1), got {train_fraction}")
    perm = np.random.default_rng(seed).permutation(len(samples))
    n_train = math.ceil(train_fraction * len(samples))
    train = [samples[i] for i in perm[:n_train]]
    test = [samples[i] for i in perm[n_train:]]
    return train, test
