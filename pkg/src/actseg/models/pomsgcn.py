"""Multi-stage graph convolutional segmenter.

Stage 1 runs spatiotemporal graph convolution blocks on the joint graph,
mean-pools over joints and classifies per frame. Later stages refine the
previous stage's softmax probabilities with dilated temporal convolution
stacks (or, with ``graph_refinement``, graph convolution blocks broadcast
back over the joints).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..errors import ConfigError, ShapeError
from ..graph import NormalizedAdjacency, SkeletonGraph, normalized_adjacency
from .common import StageOutputs, seeded_init


@dataclass(frozen=True)
class PomsgcnConfig:
    num_classes: int
    in_channels: int
    num_stages: int = 4
    stage1_layers: int = 10
    refinement_layers_per_stage: int = 10
    feature_width: int = 64
    temporal_kernel: int = 3
    dilations: tuple[int, ...] | None = None  # default 2**layer
    dropout_rate: float = 0.0
    graph_refinement: bool = False
    adjacency_strategy: str = "distance"

    def __post_init__(self):
        if self.num_stages < 2:
            raise ConfigError(
                f"need >= 2 stages (extraction + refinement), got {self.num_stages}"
            )
        if self.temporal_kernel % 2 != 1:
            raise ConfigError(f"temporal kernel must be odd, got {self.temporal_kernel}")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.dilations is not None:
            object.__setattr__(self, "dilations", tuple(int(d) for d in self.dilations))
            if any(d < 1 for d in self.dilations):
                raise ConfigError("dilation entries must be >= 1")

    def dilation_schedule(self, num_layers: int) -> tuple[int, ...]:
        if self.dilations is not None:
            if len(self.dilations) != num_layers:
                raise ConfigError(
                    f"{len(self.dilations)} dilations for {num_layers} layers"
                )
            return self.dilations
        return tuple(2**i for i in range(num_layers))


class StgcnBlock(nn.Module):
    """Spatial graph convolution + depthwise dilated temporal convolution,
    residual connection (1x1 projection when widths differ), ReLU."""

    def __init__(self, in_ch, out_ch, num_partitions, kernel, dilation, dropout):
        super().__init__()
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.kernel = kernel
        self.dilation = dilation
        # one (out, in) matrix per adjacency partition
        self.spatial_weight = nn.Parameter(torch.empty(num_partitions, out_ch, in_ch))
        self.spatial_bias = nn.Parameter(torch.empty(out_ch))
        # one length-k kernel per output channel, shared across joints
        self.temporal_weight = nn.Parameter(torch.empty(out_ch, kernel))
        self.temporal_bias = nn.Parameter(torch.empty(out_ch))
        if in_ch != out_ch:
            self.residual_proj = nn.Parameter(torch.empty(out_ch, in_ch))
        else:
            self.register_parameter("residual_proj", None)
        self.dropout = nn.Dropout(dropout)

    def fan_in_overrides(self):
        overrides = {"spatial_weight": self.in_ch, "temporal_weight": self.kernel}
        if self.residual_proj is not None:
            overrides["residual_proj"] = self.in_ch
        return overrides

    def forward(self, x: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        # x: (T, V, Cin); adj: (P, V, V)
        y = torch.einsum("pvw,twc,poc->tvo", adj, x, self.spatial_weight)
        y = y + self.spatial_bias
        # temporal depthwise conv per (joint, channel), symmetric zero padding
        t, v, c = y.shape
        pad = self.dilation * (self.kernel - 1) // 2
        seq = y.permute(1, 2, 0)  # (V, C, T), joints as batch
        seq = F.conv1d(
            seq,
            self.temporal_weight.unsqueeze(1),
            bias=self.temporal_bias,
            padding=pad,
            dilation=self.dilation,
            groups=self.out_ch,
        )
        y = seq.permute(2, 0, 1)
        y = self.dropout(y)
        if self.residual_proj is not None:
            res = x @ self.residual_proj.T
        else:
            res = x
        return F.relu(y + res)


class DilatedResidualLayer(nn.Module):
    """Dilated temporal conv -> ReLU -> 1x1 conv, residual; operates on (F, T)."""

    def __init__(self, width, dilation, dropout):
        super().__init__()
        self.conv_dilated = nn.Conv1d(width, width, 3, padding=dilation, dilation=dilation)
        self.conv_1x1 = nn.Conv1d(width, width, 1)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = F.relu(self.conv_dilated(x))
        out = self.conv_1x1(out)
        out = self.dropout(out)
        return x + out


class TemporalRefinementStage(nn.Module):
    def __init__(self, num_classes, width, num_layers, cfg: PomsgcnConfig):
        super().__init__()
        self.embed = nn.Conv1d(num_classes, width, 1)
        dilations = cfg.dilation_schedule(num_layers)
        self.layers = nn.ModuleList(
            DilatedResidualLayer(width, d, cfg.dropout_rate) for d in dilations
        )
        self.classifier = nn.Conv1d(width, num_classes, 1)

    def forward(self, probs: torch.Tensor):
        # probs: (T, K) -> features (T, F), logits (T, K)
        h = self.embed(probs.T.unsqueeze(0))
        for layer in self.layers:
            h = layer(h)
        logits = self.classifier(h).squeeze(0).T
        return logits, h.squeeze(0).T


class GraphRefinementStage(nn.Module):
    """Refinement with graph convolution blocks: probabilities are embedded,
    broadcast over joints, run through st-gcn blocks and pooled back."""

    def __init__(self, num_classes, width, num_layers, num_partitions, cfg: PomsgcnConfig):
        super().__init__()
        self.embed = nn.Conv1d(num_classes, width, 1)
        dilations = cfg.dilation_schedule(num_layers)
        self.blocks = nn.ModuleList(
            StgcnBlock(width, width, num_partitions, cfg.temporal_kernel, d, cfg.dropout_rate)
            for d in dilations
        )
        self.classifier = nn.Conv1d(width, num_classes, 1)

    def forward(self, probs: torch.Tensor, adj: torch.Tensor, num_joints: int):
        h = self.embed(probs.T.unsqueeze(0)).squeeze(0).T  # (T, F)
        x = h.unsqueeze(1).expand(-1, num_joints, -1)  # (T, V, F)
        for block in self.blocks:
            x = block(x, adj)
        features = joint_pool(x)
        logits = self.classifier(features.T.unsqueeze(0)).squeeze(0).T
        return logits, features


def joint_pool(x: torch.Tensor) -> torch.Tensor:
    """Mean over the joint axis: (T, V, F) -> (T, F). Time is never pooled."""
    return x.mean(dim=1)


class PomsgcnModel(nn.Module):
    model_type = "pomsgcn"

    def __init__(self, cfg: PomsgcnConfig, graph: SkeletonGraph, seed: int = 0):
        super().__init__()
        self.cfg = cfg
        self.graph = graph
        self.seed = int(seed)
        adj = normalized_adjacency(graph, cfg.adjacency_strategy)
        self.register_buffer(
            "adjacency",
            torch.as_tensor(np.stack(adj.matrices), dtype=torch.float64),
        )
        num_partitions = len(adj.matrices)

        dilations = cfg.dilation_schedule(cfg.stage1_layers)
        widths = [cfg.in_channels] + [cfg.feature_width] * cfg.stage1_layers
        self.stage1_blocks = nn.ModuleList(
            StgcnBlock(
                widths[i],
                widths[i + 1],
                num_partitions,
                cfg.temporal_kernel,
                dilations[i],
                cfg.dropout_rate,
            )
            for i in range(cfg.stage1_layers)
        )
        self.stage1_classifier = nn.Linear(cfg.feature_width, cfg.num_classes)
        if cfg.graph_refinement:
            self.refinement_stages = nn.ModuleList(
                GraphRefinementStage(
                    cfg.num_classes,
                    cfg.feature_width,
                    cfg.refinement_layers_per_stage,
                    num_partitions,
                    cfg,
                )
                for _ in range(cfg.num_stages - 1)
            )
        else:
            self.refinement_stages = nn.ModuleList(
                TemporalRefinementStage(
                    cfg.num_classes, cfg.feature_width, cfg.refinement_layers_per_stage, cfg
                )
                for _ in range(cfg.num_stages - 1)
            )
        self.double()
        seeded_init(self, seed)

    def forward(self, x: torch.Tensor) -> StageOutputs:
        if x.ndim != 3:
            raise ShapeError(f"expected (T, V, C) input, got shape {tuple(x.shape)}")
        t, v, c = x.shape
        if v != self.graph.num_joints or c != self.cfg.in_channels:
            raise ShapeError(
                f"input (T, {v}, {c}) does not match graph V={self.graph.num_joints},"
                f" C={self.cfg.in_channels}"
            )
        adj = self.adjacency.to(x.dtype)
        h = x
        for block in self.stage1_blocks:
            h = block(h, adj)
        features = joint_pool(h)  # (T, F)
        logits = self.stage1_classifier(features)
        stage_logits = [logits]
        for stage in self.refinement_stages:
            probs = torch.softmax(stage_logits[-1], dim=-1)
            if isinstance(stage, GraphRefinementStage):
                logits, features = stage(probs, adj, self.graph.num_joints)
            else:
                logits, features = stage(probs)
            stage_logits.append(logits)
        return StageOutputs(stage_logits=stage_logits, frame_features=features)
