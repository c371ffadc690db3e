from .common import StageOutputs, seeded_init
from .pomsgcn import PomsgcnConfig, PomsgcnModel, joint_pool
from .transformer import TransformerConfig, TransformerModel, scaled_dot_attention

__all__ = [
    "StageOutputs",
    "seeded_init",
    "PomsgcnConfig",
    "PomsgcnModel",
    "joint_pool",
    "TransformerConfig",
    "TransformerModel",
    "scaled_dot_attention",
]
