"""Adam optimizer written out explicitly, plus finite-difference gradient checks.

The optimizer operates on named parameter dictionaries so the update rule is
testable in isolation; the trainer wraps it around a model's parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from .errors import NonFiniteGradient, ShapeError


@dataclass
class AdamConfig:
    learning_rate: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    m: dict[str, torch.Tensor]
    v: dict[str, torch.Tensor]
    step: int = 0

    @classmethod
    def fresh(cls, params: dict[str, torch.Tensor]) -> "AdamState":
        return cls(
            m={k: torch.zeros_like(p) for k, p in params.items()},
            v={k: torch.zeros_like(p) for k, p in params.items()},
            step=0,
        )


def adam_step(
    params: dict[str, torch.Tensor],
    grads: dict[str, torch.Tensor],
    state: AdamState,
    cfg: AdamConfig,
) -> None:
    """In-place Adam update: m, v moments with bias correction."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - cfg.beta1**t
    bc2 = 1.0 - cfg.beta2**t
    with torch.no_grad():
        for name, p in params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ShapeError(f"gradient shape mismatch for {name!r}")
            if not torch.isfinite(g).all():
                raise NonFiniteGradient(f"non-finite gradient for parameter {name!r}")
            m = state.m[name]
            v = state.v[name]
            m.mul_(cfg.beta1).add_(g, alpha=1.0 - cfg.beta1)
            v.mul_(cfg.beta2).addcmul_(g, g, value=1.0 - cfg.beta2)
            m_hat = m / bc1
            v_hat = v / bc2
            p.sub_(cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps))


class Adam:
    """Stateful wrapper over adam_step for a model's named parameters."""

    def __init__(self, model: torch.nn.Module, cfg: AdamConfig):
        self.cfg = cfg
        self.params = dict(model.named_parameters())
        self.state = AdamState.fresh(self.params)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self) -> None:
        grads = {}
        for name, p in self.params.items():
            grads[name] = (
                p.grad if p.grad is not None else torch.zeros_like(p)
            )
        adam_step(self.params, grads, self.state, self.cfg)


def finite_difference_gradcheck(
    loss_fn,
    params: dict[str, torch.Tensor],
    step: float = 1e-6,
    max_coords: int = 200,
    seed: int = 0,
) -> float:
    """Compare autograd gradients of ``loss_fn()`` against central differences
    on a random subsample of coordinates; returns the max relative error.

    Relative error uses max(1e-8, |analytic| + |numeric|) as denominator.
    """
    for p in params.values():
        p.grad = None
    loss = loss_fn()
    loss.backward()
    grads = {
        name: (p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p))
        for name, p in params.items()
    }

    coords = [
        (name, idx)
        for name, p in params.items()
        for idx in range(p.numel())
    ]
    rng = torch.Generator().manual_seed(int(seed))
    if len(coords) > max_coords:
        chosen = torch.randperm(len(coords), generator=rng)[:max_coords]
        coords = [coords[int(i)] for i in chosen]

    max_rel = 0.0
    with torch.no_grad():
        for name, idx in coords:
            flat = params[name].view(-1)
            old = flat[idx].item()
            flat[idx] = old + step
            up = float(loss_fn())
            flat[idx] = old - step
            down = float(loss_fn())
            flat[idx] = old
            numeric = (up - down) / (2.0 * step)
            analytic = float(grads[name].view(-1)[idx])
            denom = max(1e-8, abs(analytic) + abs(numeric))
            max_rel = max(max_rel, abs(analytic - numeric) / denom)
    return max_rel
