"""Skeleton/sensor temporal action segmentation toolkit.

Per-frame classifiers (multi-stage graph convolutional network, encoder-only
transformer), combined CE + probability-MSE training loss, last-layer feature
fusion, and segment-wise F1 / frame-accuracy evaluation.
"""

from .data import (
    DatasetMeta,
    SequenceSample,
    SyntheticConfig,
    decimate,
    generate_synthetic,
    load_dataset,
    load_sample,
    one_hot,
    split_dataset,
    write_dataset,
    write_sample,
)
from .errors import ActsegError
from .estimators import PomsgcnSegmenter, TransformerSegmenter
from .graph import (
    NormalizedAdjacency,
    SkeletonGraph,
    build_skeleton_graph,
    normalized_adjacency,
    permute_graph,
)
from .losses import (
    LossConfig,
    combined_loss,
    framewise_cross_entropy,
    mse_probability_loss,
    multi_stage_cross_entropy,
    softmax,
)
from .metrics import (
    EvaluationReport,
    MatchCounts,
    Segment,
    evaluate,
    frame_accuracy,
    frames_to_segments,
    interval_iou,
    match_segments,
    segment_f1,
)
from .models import (
    PomsgcnConfig,
    PomsgcnModel,
    StageOutputs,
    TransformerConfig,
    TransformerModel,
    joint_pool,
    scaled_dot_attention,
)
from .training import TrainConfig, predict_labels, train_model

__version__ = "0.1.0"
