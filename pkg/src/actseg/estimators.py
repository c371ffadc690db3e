"""sklearn-style estimator wrappers around the segmentation models.

``X`` is a list of per-sequence feature arrays (T, V, C) and ``y`` a list of
per-sequence integer label arrays; both may instead be given as a list of
SequenceSample (with ``y=None``). ``predict`` returns one label array per
input sequence, so the estimators compose with sklearn model selection
utilities that tolerate list inputs.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .data import SequenceSample
from .errors import InsufficientData
from .graph import build_skeleton_graph
from .losses import LossConfig
from .metrics import frame_accuracy
from .models.pomsgcn import PomsgcnConfig, PomsgcnModel
from .models.transformer import TransformerConfig, TransformerModel
from .training import TrainConfig, predict_labels, train_model


def _as_samples(X, y) -> list[SequenceSample]:
    if y is None:
        if not all(isinstance(s, SequenceSample) for s in X):
            raise InsufficientData("y is required unless X is a list of SequenceSample")
        return list(X)
    samples = []
    for i, (feats, labels) in enumerate(zip(X, y)):
        feats = np.asarray(feats, dtype=np.float64)
        if feats.ndim == 2:  # flat (T, D) sequences get a singleton channel axis
            feats = feats[:, :, None]
        samples.append(
            SequenceSample(
                features=np.asarray(feats, dtype=np.float64),
                labels=np.asarray(labels, dtype=np.int64),
                sampling_rate_hz=1.0,
                sample_id=f"seq_{i:04d}",
            )
        )
    return samples


class _SequenceSegmenterMixin:
    def predict(self, X):
        samples = []
        for i, item in enumerate(X):
            if isinstance(item, SequenceSample):
                samples.append(item)
            else:
                feats = np.asarray(item, dtype=np.float64)
                if feats.ndim == 2:
                    feats = feats[:, :, None]
                samples.append(
                    SequenceSample(
                        features=feats,
                        labels=np.zeros(feats.shape[0], dtype=np.int64),
                        sampling_rate_hz=1.0,
                        sample_id=f"seq_{i:04d}",
                    )
                )
        return [predict_labels(self.model_, s) for s in samples]

    def score(self, X, y=None):
        if y is None:
            y = [s.labels for s in X]
        preds = self.predict(X)
        pooled_pred = np.concatenate(preds)
        pooled_true = np.concatenate([np.asarray(t) for t in y])
        return frame_accuracy(pooled_pred, pooled_true)

    def _loss_config(self) -> LossConfig:
        return LossConfig(
            mse_weight=self.mse_weight,
            smoothing_mode=self.smoothing_mode,
        )

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=self.seed,
            precision=self.precision,
        )


class PomsgcnSegmenter(_SequenceSegmenterMixin, BaseEstimator):
    """Multi-stage graph convolutional per-frame classifier."""

    def __init__(
        self,
        num_classes=2,
        num_joints=1,
        edges=(),
        in_channels=1,
        num_stages=4,
        stage1_layers=10,
        refinement_layers_per_stage=10,
        feature_width=64,
        temporal_kernel=3,
        dropout_rate=0.0,
        graph_refinement=False,
        adjacency_strategy="distance",
        mse_weight=0.15,
        smoothing_mode="plain_mse",
        epochs=100,
        batch_size=4,
        learning_rate=0.0005,
        seed=0,
        precision="double",
    ):
        self.num_classes = num_classes
        self.num_joints = num_joints
        self.edges = edges
        self.in_channels = in_channels
        self.num_stages = num_stages
        self.stage1_layers = stage1_layers
        self.refinement_layers_per_stage = refinement_layers_per_stage
        self.feature_width = feature_width
        self.temporal_kernel = temporal_kernel
        self.dropout_rate = dropout_rate
        self.graph_refinement = graph_refinement
        self.adjacency_strategy = adjacency_strategy
        self.mse_weight = mse_weight
        self.smoothing_mode = smoothing_mode
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.precision = precision

    def fit(self, X, y=None):
        samples = _as_samples(X, y)
        graph = build_skeleton_graph(self.num_joints, list(self.edges))
        cfg = PomsgcnConfig(
            num_classes=self.num_classes,
            in_channels=self.in_channels,
            num_stages=self.num_stages,
            stage1_layers=self.stage1_layers,
            refinement_layers_per_stage=self.refinement_layers_per_stage,
            feature_width=self.feature_width,
            temporal_kernel=self.temporal_kernel,
            dropout_rate=self.dropout_rate,
            graph_refinement=self.graph_refinement,
            adjacency_strategy=self.adjacency_strategy,
        )
        self.model_ = PomsgcnModel(cfg, graph, seed=self.seed)
        self.history_ = train_model(
            self.model_, samples, self._loss_config(), self._train_config()
        )
        return self


class TransformerSegmenter(_SequenceSegmenterMixin, BaseEstimator):
    """Encoder-only transformer per-frame classifier (no positional encoding)."""

    def __init__(
        self,
        num_classes=2,
        input_size=1,
        model_dim=64,
        num_heads=4,
        num_layers=2,
        feedforward_dim=128,
        dropout_rate=0.0,
        mse_weight=0.15,
        smoothing_mode="plain_mse",
        epochs=100,
        batch_size=4,
        learning_rate=0.0005,
        seed=0,
        precision="double",
    ):
        self.num_classes = num_classes
        self.input_size = input_size
        self.model_dim = model_dim
        self.num_heads = num_heads
        self.num_layers = num_layers
        self.feedforward_dim = feedforward_dim
        self.dropout_rate = dropout_rate
        self.mse_weight = mse_weight
        self.smoothing_mode = smoothing_mode
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.precision = precision

    def fit(self, X, y=None):
        samples = _as_samples(X, y)
        cfg = TransformerConfig(
            num_classes=self.num_classes,
            input_size=self.input_size,
            model_dim=self.model_dim,
            num_heads=self.num_heads,
            num_layers=self.num_layers,
            feedforward_dim=self.feedforward_dim,
            dropout_rate=self.dropout_rate,
        )
        self.model_ = TransformerModel(cfg, seed=self.seed)
        self.history_ = train_model(
            self.model_, samples, self._loss_config(), self._train_config()
        )
        return self
