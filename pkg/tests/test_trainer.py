import numpy as np
import pytest
import torch

from actseg.checkpoint import load_checkpoint, save_checkpoint
from actseg.data import SequenceSample, SyntheticConfig, generate_synthetic
from actseg.errors import (
    ChecksumError,
    CompatibilityError,
    InsufficientData,
    NonFiniteGradient,
)
from actseg.graph import build_skeleton_graph
from actseg.losses import LossConfig
from actseg.models.pomsgcn import PomsgcnConfig, PomsgcnModel
from actseg.models.transformer import TransformerConfig, TransformerModel
from actseg.optim import (
    Adam,
    AdamConfig,
    AdamState,
    adam_step,
    finite_difference_gradcheck,
)
from actseg.training import TrainConfig, predict_labels, train_model


def test_adam_first_step_hand_computed():
    theta = {"w": torch.zeros(1, dtype=torch.float64)}
    grads = {"w": torch.ones(1, dtype=torch.float64)}
    state = AdamState.fresh(theta)
    adam_step(theta, grads, state, AdamConfig(learning_rate=0.001))
    # m_hat = v_hat = 1 at t=1, so the step is -lr / (1 + eps)
    assert abs(float(theta["w"]) + 0.001) < 1e-9


def test_adam_zero_gradient_no_change():
    theta = {"w": torch.full((3,), 2.5, dtype=torch.float64)}
    grads = {"w": torch.zeros(3, dtype=torch.float64)}
    state = AdamState.fresh(theta)
    adam_step(theta, grads, state, AdamConfig())
    assert torch.equal(theta["w"], torch.full((3,), 2.5, dtype=torch.float64))


def test_adam_elementwise_independence():
    cfg = AdamConfig(learning_rate=0.01)
    joint = {"w": torch.tensor([1.0, -2.0], dtype=torch.float64)}
    js = AdamState.fresh(joint)
    for _ in range(5):
        adam_step(joint, {"w": torch.tensor([0.3, -0.7], dtype=torch.float64)}, js, cfg)
    for i, g in enumerate([0.3, -0.7]):
        single = {"w": torch.tensor([[1.0], [-2.0]][i], dtype=torch.float64)}
        ss = AdamState.fresh(single)
        for _ in range(5):
            adam_step(single, {"w": torch.tensor([g], dtype=torch.float64)}, ss, cfg)
        assert torch.allclose(single["w"], joint["w"][i : i + 1], atol=1e-15)


def test_adam_step_magnitude_bounded():
    cfg = AdamConfig(learning_rate=0.01)
    theta = {"w": torch.zeros(1, dtype=torch.float64)}
    state = AdamState.fresh(theta)
    prev = float(theta["w"])
    for _ in range(10):
        adam_step(theta, {"w": torch.full((1,), 3.7, dtype=torch.float64)}, state, cfg)
        step = abs(float(theta["w"]) - prev)
        prev = float(theta["w"])
    assert step <= cfg.learning_rate * 1.01


def test_adam_non_finite_gradient():
    theta = {"w": torch.zeros(1, dtype=torch.float64)}
    grads = {"w": torch.full((1,), float("nan"))}
    state = AdamState.fresh(theta)
    with pytest.raises(NonFiniteGradient, match="w"):
        adam_step(theta, grads, state, AdamConfig())


def test_gradcheck_quadratic():
    w = torch.tensor([3.0], dtype=torch.float64, requires_grad=True)
    err = finite_difference_gradcheck(lambda: (w**2).sum(), {"w": w}, step=1e-5)
    assert err < 1e-9


def test_gradcheck_constant():
    w = torch.tensor([1.0], dtype=torch.float64, requires_grad=True)
    err = finite_difference_gradcheck(lambda: (w * 0.0).sum(), {"w": w}, step=1e-5)
    assert err == 0.0


def _tiny_dataset(seed=0, n=3, frames=24):
    cfg = SyntheticConfig(
        num_classes=3, num_joints=3, channels=2, num_sequences=n,
        frames_per_sequence=frames, min_segment_length=4,
        max_segment_length=10, noise_std=0.05, seed=seed,
    )
    return generate_synthetic(cfg)


def _tiny_model(seed=0):
    g = build_skeleton_graph(3, [(0, 1), (1, 2)])
    cfg = PomsgcnConfig(
        num_classes=3, in_channels=2, num_stages=2, stage1_layers=2,
        refinement_layers_per_stage=2, feature_width=8,
    )
    return PomsgcnModel(cfg, g, seed=seed)


def test_train_deterministic_checkpoint():
    samples, _ = _tiny_dataset()
    cfg = TrainConfig(epochs=3, batch_size=2, seed=5)
    loss_cfg = LossConfig()
    m1 = _tiny_model(seed=1)
    h1 = train_model(m1, samples, loss_cfg, cfg)
    m2 = _tiny_model(seed=1)
    h2 = train_model(m2, samples, loss_cfg, cfg)
    assert h1 == h2
    for p1, p2 in zip(m1.parameters(), m2.parameters()):
        assert torch.equal(p1, p2)


def test_train_single_sample_small_batch_boundary():
    samples, _ = _tiny_dataset(n=1)
    m = _tiny_model()
    history = train_model(m, samples, LossConfig(), TrainConfig(epochs=2, batch_size=4))
    assert len(history) == 2
    assert all(np.isfinite(row["loss"]) for row in history)


def test_train_empty_set():
    with pytest.raises(InsufficientData):
        train_model(_tiny_model(), [], LossConfig(), TrainConfig(epochs=1))


def test_train_loss_decreases_early():
    samples, _ = _tiny_dataset(n=4, frames=40)
    m = _tiny_model(seed=2)
    history = train_model(
        m, samples, LossConfig(), TrainConfig(epochs=10, batch_size=2, learning_rate=0.01)
    )
    losses = [row["loss"] for row in history]
    assert all(np.isfinite(l) for l in losses)
    assert losses[-1] < losses[0]


def test_predict_labels_shape():
    samples, _ = _tiny_dataset(n=1)
    m = _tiny_model()
    pred = predict_labels(m, samples[0])
    assert pred.shape == samples[0].labels.shape
    assert pred.dtype.kind == "i"


def test_checkpoint_round_trip_pomsgcn(tmp_path):
    m = _tiny_model(seed=7)
    save_checkpoint(m, tmp_path / "ck", epoch=12)
    loaded, manifest = load_checkpoint(tmp_path / "ck")
    assert manifest["epoch"] == 12
    for (n1, p1), (n2, p2) in zip(
        m.named_parameters(), loaded.named_parameters()
    ):
        assert n1 == n2
        assert torch.equal(p1, p2)


def test_checkpoint_round_trip_transformer(tmp_path):
    m = TransformerModel(
        TransformerConfig(num_classes=4, input_size=6, model_dim=8, num_heads=2,
                          num_layers=1, feedforward_dim=16),
        seed=3,
    )
    save_checkpoint(m, tmp_path / "ck")
    loaded, _ = load_checkpoint(tmp_path / "ck")
    x = torch.randn(5, 6, dtype=torch.float64)
    assert torch.equal(m(x).stage_logits[0], loaded(x).stage_logits[0])


def test_checkpoint_truncated_blob(tmp_path):
    m = _tiny_model()
    save_checkpoint(m, tmp_path / "ck")
    blob = (tmp_path / "ck" / "params.bin").read_bytes()
    (tmp_path / "ck" / "params.bin").write_bytes(blob[:-16])
    with pytest.raises(ChecksumError):
        load_checkpoint(tmp_path / "ck")


def test_checkpoint_unknown_parameter(tmp_path):
    import json

    m = _tiny_model()
    save_checkpoint(m, tmp_path / "ck")
    manifest = json.loads((tmp_path / "ck" / "manifest.json").read_text())
    manifest["params"][0]["name"] = "no_such_parameter"
    (tmp_path / "ck" / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(CompatibilityError):
        load_checkpoint(tmp_path / "ck")


GRADCHECK_CASES = [
    ("plain_mse", 0.0),
    ("plain_mse", 0.15),
    ("plain_mse", 1.0),
    ("truncated_adjacent", 0.15),
]


@pytest.mark.parametrize("mode,lam", GRADCHECK_CASES)
def test_pomsgcn_gradcheck(mode, lam):
    from actseg.losses import combined_loss

    torch.manual_seed(0)
    g = build_skeleton_graph(3, [(0, 1), (1, 2)])
    cfg = PomsgcnConfig(
        num_classes=3, in_channels=2, num_stages=2, stage1_layers=2,
        refinement_layers_per_stage=2, feature_width=8,
    )
    m = PomsgcnModel(cfg, g, seed=0)
    x = torch.randn(8, 3, 2, dtype=torch.float64)
    labels = torch.randint(0, 3, (8,))
    loss_cfg = LossConfig(mse_weight=lam, smoothing_mode=mode)

    def loss_fn():
        return combined_loss(m(x).stage_logits, labels, loss_cfg)[0]

    err = finite_difference_gradcheck(
        loss_fn, dict(m.named_parameters()), step=1e-5, max_coords=80, seed=1
    )
    assert err < 1e-5


@pytest.mark.parametrize("mode,lam", GRADCHECK_CASES)
def test_transformer_gradcheck(mode, lam):
    from actseg.losses import combined_loss

    torch.manual_seed(0)
    cfg = TransformerConfig(
        num_classes=3, input_size=4, model_dim=8, num_heads=1,
        num_layers=1, feedforward_dim=16,
    )
    m = TransformerModel(cfg, seed=0)
    x = torch.randn(6, 4, dtype=torch.float64)
    labels = torch.randint(0, 3, (6,))
    loss_cfg = LossConfig(mse_weight=lam, smoothing_mode=mode)

    def loss_fn():
        return combined_loss(m(x).stage_logits, labels, loss_cfg)[0]

    err = finite_difference_gradcheck(
        loss_fn, dict(m.named_parameters()), step=1e-5, max_coords=80, seed=2
    )
    assert err < 1e-5
