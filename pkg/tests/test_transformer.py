import numpy as np
import pytest
import torch

from actseg.errors import ConfigError, ShapeError
from actseg.models.transformer import (
    TransformerConfig,
    TransformerModel,
    scaled_dot_attention,
)
from oracles import dense_attention


def small_cfg(**kw):
    defaults = dict(
        num_classes=3, input_size=4, model_dim=8, num_heads=2,
        num_layers=2, feedforward_dim=16,
    )
    defaults.update(kw)
    return TransformerConfig(**defaults)


def test_attention_single_token():
    q = torch.randn(1, 3, dtype=torch.float64)
    v = torch.randn(1, 3, dtype=torch.float64)
    out, w = scaled_dot_attention(q, q, v)
    assert torch.allclose(w, torch.ones(1, 1, dtype=torch.float64))
    assert torch.allclose(out, v)


def test_attention_identical_keys_average_values():
    q = torch.randn(2, 3, dtype=torch.float64)
    k = torch.ones(2, 3, dtype=torch.float64)
    v = torch.randn(2, 3, dtype=torch.float64)
    out, w = scaled_dot_attention(q, k, v)
    mean = v.mean(dim=0)
    assert torch.allclose(out[0], mean, atol=1e-12)
    assert torch.allclose(out[1], mean, atol=1e-12)


def test_attention_matches_dense_oracle():
    rng = np.random.default_rng(0)
    q = rng.standard_normal((3, 5))
    k = rng.standard_normal((3, 5))
    v = rng.standard_normal((3, 5))
    out, w = scaled_dot_attention(
        torch.tensor(q), torch.tensor(k), torch.tensor(v)
    )
    o_ref, w_ref = dense_attention(q, k, v)
    np.testing.assert_allclose(out.numpy(), o_ref, atol=1e-12)
    np.testing.assert_allclose(w.numpy(), w_ref, atol=1e-12)


def test_attention_zero_dim_rejected():
    with pytest.raises(ShapeError):
        scaled_dot_attention(
            torch.zeros(2, 0), torch.zeros(2, 0), torch.zeros(2, 0)
        )


def test_attention_rows_stochastic():
    rng = np.random.default_rng(1)
    q = torch.tensor(rng.standard_normal((6, 4)))
    _, w = scaled_dot_attention(q, q, q)
    assert torch.allclose(w.sum(-1), torch.ones(6, dtype=torch.float64), atol=1e-9)
    assert (w >= 0).all()


def test_config_head_divisibility():
    with pytest.raises(ConfigError):
        small_cfg(model_dim=8, num_heads=3)


def test_init_deterministic():
    m1 = TransformerModel(small_cfg(), seed=9)
    m2 = TransformerModel(small_cfg(), seed=9)
    for p1, p2 in zip(m1.parameters(), m2.parameters()):
        assert torch.equal(p1, p2)


def test_head_shape():
    m = TransformerModel(small_cfg(num_classes=5, input_size=18, model_dim=32), seed=0)
    assert m.head.weight.shape == (5, 32)


def test_forward_shapes_and_features():
    m = TransformerModel(small_cfg(), seed=0)
    out = m(torch.randn(7, 4, dtype=torch.float64))
    assert out.stage_logits[0].shape == (7, 3)
    assert out.frame_features.shape == (7, 8)


def test_forward_accepts_tvc_input():
    m = TransformerModel(small_cfg(input_size=6), seed=0)
    out = m(torch.randn(5, 2, 3, dtype=torch.float64))
    assert out.stage_logits[0].shape == (5, 3)


def test_forward_wrong_width():
    m = TransformerModel(small_cfg(), seed=0)
    with pytest.raises(ShapeError):
        m(torch.randn(5, 7, dtype=torch.float64))


def test_single_frame_input():
    m = TransformerModel(small_cfg(num_layers=1), seed=0)
    x = torch.randn(1, 4, dtype=torch.float64)
    out, attn = m(x, collect_attention=True)
    assert out.stage_logits[0].shape == (1, 3)
    assert torch.allclose(attn[0], torch.ones_like(attn[0]))


def test_time_permutation_equivariance_double():
    m = TransformerModel(small_cfg(), seed=4)
    x = torch.randn(16, 4, dtype=torch.float64)
    base = m(x).stage_logits[0]
    rng = np.random.default_rng(0)
    for _ in range(5):
        perm = rng.permutation(16)
        permuted = m(x[perm]).stage_logits[0]
        assert (permuted - base[perm]).abs().max() < 1e-10


def test_time_permutation_equivariance_single_precision():
    m = TransformerModel(small_cfg(), seed=4).float()
    x = torch.randn(16, 4, dtype=torch.float32)
    base = m(x).stage_logits[0]
    rng = np.random.default_rng(1)
    for _ in range(5):
        perm = rng.permutation(16)
        permuted = m(x[perm]).stage_logits[0]
        assert (permuted - base[perm]).abs().max() < 1e-6


def test_attention_weights_collected_per_layer():
    cfg = small_cfg(num_layers=3, num_heads=2)
    m = TransformerModel(cfg, seed=0)
    _, attn = m(torch.randn(6, 4, dtype=torch.float64), collect_attention=True)
    assert len(attn) == 3
    for w in attn:
        assert w.shape == (2, 6, 6)
        assert torch.allclose(w.sum(-1), torch.ones(2, 6, dtype=torch.float64), atol=1e-9)
