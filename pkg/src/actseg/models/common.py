"""Shared model plumbing: stage output container and seeded initialization."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn


@dataclass
class StageOutputs:
    """Per-stage frame logits (each T x K) and the T x F features that feed
    the final stage's classifier."""

    stage_logits: list[torch.Tensor]
    frame_features: torch.Tensor

    @property
    def num_stages(self) -> int:
        return len(self.stage_logits)

    @property
    def final_logits(self) -> torch.Tensor:
        return self.stage_logits[-1]


def seeded_init(model: nn.Module, seed: int) -> None:
    """Deterministic init: weights uniform in [-sqrt(1/fan_in), +sqrt(1/fan_in)],
    biases zero, norm scales one. Draw order is parameter registration order."""
    gen = torch.Generator().manual_seed(int(seed))
    fan_ins: dict[str, int] = {}
    for mod_name, mod in model.named_modules():
        overrides = getattr(mod, "fan_in_overrides", None)
        if overrides is None:
            continue
        for pname, fan_in in overrides().items():
            full = f"{mod_name}.{pname}" if mod_name else pname
            fan_ins[full] = fan_in
    with torch.no_grad():
        for name, p in model.named_parameters():
            if p.ndim == 1:
                # 1-d "weight" arrays are norm scales; everything else is a bias
                if name.rsplit(".", 1)[-1] == "weight":
                    p.fill_(1.0)
                else:
                    p.zero_()
                continue
            fan_in = fan_ins.get(name, int(torch.tensor(p.shape[1:]).prod()))
            bound = (1.0 / fan_in) ** 0.5
            draw = torch.rand(p.shape, generator=gen, dtype=torch.float64)
            p.copy_((draw * 2.0 * bound - bound).to(p.dtype))
