"""Experiment configuration: one versioned JSON document per run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import SyntheticConfig
from .errors import ConfigError, FormatError
from .graph import SkeletonGraph, build_skeleton_graph
from .losses import LossConfig
from .models.pomsgcn import PomsgcnConfig
from .models.transformer import TransformerConfig
from .training import TrainConfig

SPEC_VERSION = 1

MODEL_TYPES = ("pomsgcn", "transformer")


@dataclass(frozen=True)
class DatasetSection:
    path: str | None = None
    synthetic: SyntheticConfig | None = None
    name: str = "synth"
    decimation_factor: int = 1
    train_fraction: float = 0.8
    split_seed: int = 0

    def __post_init__(self):
        if (self.path is None) == (self.synthetic is None):
            raise ConfigError("dataset section needs exactly one of 'path' or 'synthetic'")
        if self.decimation_factor < 1:
            raise ConfigError("decimation_factor must be >= 1")


@dataclass(frozen=True)
class EvalSection:
    thresholds: tuple[float, ...] = (0.5,)
    background_class: int | None = None
    averaging: str = "micro"

    def __post_init__(self):
        if self.averaging not in ("micro", "macro"):
            raise ConfigError(f"unknown averaging {self.averaging!r}")
        for t in self.thresholds:
            if not (0.0 < t <= 1.0):
                raise ConfigError(f"threshold {t} outside (0, 1]")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSection
    model_type: str
    model_options: dict
    graph: SkeletonGraph | None
    loss: LossConfig
    train: TrainConfig
    eval: EvalSection
    raw: dict  # exact parsed document, echoed into every run directory

    def pomsgcn_config(self, num_classes: int, in_channels: int) -> PomsgcnConfig:
        opts = dict(self.model_options)
        if "dilations" in opts and opts["dilations"] is not None:
            opts["dilations"] = tuple(opts["dilations"])
        return PomsgcnConfig(num_classes=num_classes, in_channels=in_channels, **opts)

    def transformer_config(self, num_classes: int, input_size: int) -> TransformerConfig:
        return TransformerConfig(
            num_classes=num_classes, input_size=input_size, **self.model_options
        )


def _take(d: dict, cls, section: str):
    try:
        return cls(**d)
    except TypeError as e:
        raise ConfigError(f"bad {section} section: {e}") from e


def parse_experiment_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if doc.get("spec_version") != SPEC_VERSION:
        raise ConfigError(
            f"spec_version must be {SPEC_VERSION}, got {doc.get('spec_version')!r}"
        )
    ds = dict(doc.get("dataset", {}))
    if "synthetic" in ds and ds["synthetic"] is not None:
        ds["synthetic"] = _take(dict(ds["synthetic"]), SyntheticConfig, "dataset.synthetic")
    dataset = _take(ds, DatasetSection, "dataset")

    model = dict(doc.get("model", {}))
    model_type = model.pop("type", None)
    if model_type not in MODEL_TYPES:
        raise ConfigError(f"model.type must be one of {MODEL_TYPES}, got {model_type!r}")

    graph = None
    if "graph" in doc and doc["graph"] is not None:
        g = doc["graph"]
        graph = build_skeleton_graph(g["num_joints"], g.get("edges", []))
    if model_type == "pomsgcn" and graph is None and dataset.synthetic is None:
        raise ConfigError("pomsgcn requires a graph section (or a synthetic dataset)")

    loss = _take(dict(doc.get("loss", {})), LossConfig, "loss")
    train = _take(dict(doc.get("train", {})), TrainConfig, "train")
    ev = dict(doc.get("eval", {}))
    if "thresholds" in ev:
        ev["thresholds"] = tuple(float(t) for t in ev["thresholds"])
    eval_section = _take(ev, EvalSection, "eval")
    return ExperimentConfig(
        dataset=dataset,
        model_type=model_type,
        model_options=model,
        graph=graph,
        loss=loss,
        train=train,
        eval=eval_section,
        raw=doc,
    )


@dataclass(frozen=True)
class FusionRunConfig:
    train: TrainConfig
    eval: EvalSection
    raw: dict
    hidden_width: int = 64
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1
    train_fraction: float = 0.8
    split_seed: int = 0
    dataset_name: str = "synth"


def parse_fusion_config(doc: dict) -> FusionRunConfig:
    if doc.get("spec_version") != SPEC_VERSION:
        raise ConfigError(
            f"spec_version must be {SPEC_VERSION}, got {doc.get('spec_version')!r}"
        )
    train = _take(dict(doc.get("train", {})), TrainConfig, "train")
    ev = dict(doc.get("eval", {}))
    if "thresholds" in ev:
        ev["thresholds"] = tuple(float(t) for t in ev["thresholds"])
    eval_section = _take(ev, EvalSection, "eval")
    fusion = dict(doc.get("fusion", {}))
    ds = dict(doc.get("dataset", {}))
    return FusionRunConfig(
        train=train,
        eval=eval_section,
        raw=doc,
        hidden_width=int(fusion.get("hidden_width", 64)),
        bn_eps=float(fusion.get("bn_eps", 1e-5)),
        bn_momentum=float(fusion.get("bn_momentum", 0.1)),
        train_fraction=float(ds.get("train_fraction", 0.8)),
        split_seed=int(ds.get("split_seed", 0)),
        dataset_name=str(ds.get("name", "synth")),
    )


def load_experiment_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON in {path}: {e}") from e
    return parse_experiment_config(doc)
