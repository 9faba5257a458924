"""Model assembly: shapes, causality, ablation variants, warm starting."""

import numpy as np
import pytest

from autodiff.rng import RngStream
from autodiff.tensor import Tensor, no_grad
from config.errors import CheckpointError, ConfigError, DimensionError
from phase3_model.checkpoint import export_weights, save_checkpoint
from phase3_model.config import ModelConfig, preset, token_count
from phase3_model.layers import count_parameters
from phase3_model.network import bridge_forward, build_model, tcn_forward
from phase4_training.losses import mse_loss
from phase4_training.optimizer import Adam, AdamHyper
from phase5_interface.ablation import VARIANTS, apply_variant


def _inputs(config, batch=3, seed=0):
    return RngStream(seed).normal(1.0, (batch, config.in_channels, config.timepoints), np.float32)


def test_full_scale_geometry_gives_14_tokens():
    config = ModelConfig()
    assert config.bridge_width() == 14
    assert config.bridge_height() == 256
    assert config.token_count() == 14
    assert config.positions == 15
    assert config.head_dim == 64


def test_token_count_formula():
    assert token_count(14, 1, 1) == 14
    assert token_count(14, 2, 2) == 7
    assert token_count(14, 7, 7) == 2
    assert token_count(14, 3, 3) == 4
    assert token_count(14, 15, 1) == 0


@pytest.mark.parametrize("kernel, stride", [(9, 1), (20, 20)])
def test_geometry_without_tokens_is_rejected(kernel, stride):
    with pytest.raises(ConfigError):
        preset("desk", patch_projection_kernel=kernel, patch_projection_stride=stride)


def test_config_invariants():
    with pytest.raises(ConfigError):
        preset("desk", vit_heads=3)
    with pytest.raises(ConfigError):
        preset("desk", tcn_channels=(8, 16, 24))
    with pytest.raises(ConfigError):
        preset("desk", tcn_dropout=1.0)
    with pytest.raises(ConfigError):
        preset("desk").replace(ablation={"remove_spatial_conv": True,
                                         "remove_temporal_conv": True})
    with pytest.raises(ConfigError):
        preset("tiny")


def test_desk_forward_maps_batch_to_xy(desk_config):
    model = build_model(desk_config, RngStream(1)).eval()
    with no_grad():
        out = model(_inputs(desk_config))
    assert out.shape == (3, 2)
    assert np.all(np.isfinite(out.data))


def test_intermediate_shapes(desk_config):
    model = build_model(desk_config, RngStream(1)).eval()
    x = _inputs(desk_config, batch=2)
    with no_grad():
        h = tcn_forward(model, x)
        assert h.shape == (2, 32, 64)
        b = bridge_forward(model, h)
    assert b.shape == (2, desk_config.embed_dim, 1, desk_config.bridge_width())


def test_tcn_is_causal(desk_config):
    model = build_model(desk_config, RngStream(2)).eval()
    x = _inputs(desk_config, batch=2)
    changed = x.copy()
    changed[..., 40:] += 3.0
    with no_grad():
        a = tcn_forward(model, x).data
        b = tcn_forward(model, changed).data
    np.testing.assert_array_equal(a[..., :40], b[..., :40])


def test_same_seed_same_weights(desk_config):
    a = build_model(desk_config, RngStream(5)).state_dict()
    b = build_model(desk_config, RngStream(5)).state_dict()
    c = build_model(desk_config, RngStream(6)).state_dict()
    assert list(a) == list(b)
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert not np.array_equal(a["head.fc1.weight"], c["head.fc1.weight"])


def test_eval_is_deterministic_and_train_uses_dropout(desk_config):
    model = build_model(desk_config, RngStream(3))
    x = _inputs(desk_config, batch=4)
    model.eval()
    with no_grad():
        first, second = model(x).data, model(x).data
        np.testing.assert_array_equal(first, second)
        model.train()
        noisy = model(x).data
    assert not np.allclose(first, noisy)


def test_initialisation_rules(desk_config):
    state = build_model(desk_config, RngStream(4)).state_dict()
    bound = 1.0 / np.sqrt(desk_config.embed_dim)
    assert np.abs(state["head.fc1.weight"]).max() <= bound
    assert not state["head.fc1.bias"].any()
    assert np.abs(state["vit.pos_embed"]).max() <= 0.04 + 1e-7
    np.testing.assert_array_equal(state["bridge.bn.gamma"], 1.0)
    np.testing.assert_array_equal(state["bridge.bn.running_var"], 1.0)
    v = state["tcn.block0.conv1.v"]
    np.testing.assert_allclose(state["tcn.block0.conv1.g"],
                               np.sqrt((v.astype(np.float64) ** 2).sum(axis=(1, 2))), rtol=1e-6)


def test_parameter_names_follow_scheme(desk_config):
    names = [n for n, _ in build_model(desk_config, RngStream(0)).named_parameters()]
    for expected in ("tcn.block0.conv1.v", "tcn.block0.downsample.weight",
                     "bridge.temporal.weight", "bridge.bn.gamma", "bridge.spatial.weight",
                     "vit.patch_proj.weight", "vit.cls_token", "vit.pos_embed",
                     "vit.layer1.attn.q.weight", "vit.layer0.mlp.fc2.bias", "vit.norm.gamma",
                     "head.fc2.weight"):
        assert expected in names
    assert "bridge.temporal.bias" not in names


@pytest.mark.parametrize("variant", list(VARIANTS))
def test_every_variant_keeps_input_and_output_shapes(desk_config, variant):
    config = apply_variant(desk_config, variant)
    model = build_model(config, RngStream(0)).eval()
    with no_grad():
        assert model(_inputs(config, batch=2)).shape == (2, 2)


def test_removed_layers_drop_their_parameters(desk_config):
    full = count_parameters(build_model(desk_config, RngStream(0)))
    for variant, missing in (("no_pointwise", "vit.patch_proj.weight"),
                             ("no_temporal", "bridge.temporal.weight"),
                             ("no_spatial", "bridge.spatial.weight")):
        model = build_model(apply_variant(desk_config, variant), RngStream(0))
        names = dict(model.named_parameters())
        assert missing not in names
        assert count_parameters(model) < full


def test_dropout_variants_only_change_rate(desk_config):
    for name, rate in (("dropout_0", 0.0), ("dropout_25", 0.25), ("dropout_50", 0.5)):
        config = apply_variant(desk_config, name)
        assert config.effective_tcn_dropout == rate
        assert config.tcn_dropout == desk_config.tcn_dropout


def test_wrong_channel_count_is_dimension_error(desk_config):
    model = build_model(desk_config, RngStream(0)).eval()
    with pytest.raises(DimensionError) as info:
        model(np.ones((2, 10, desk_config.timepoints), dtype=np.float32))
    assert info.value.axis == 1


def test_longer_window_than_configured_is_config_error(desk_config):
    model = build_model(desk_config, RngStream(0)).eval()
    with no_grad(), pytest.raises(ConfigError):
        model(np.ones((2, desk_config.in_channels, 2 * desk_config.timepoints), dtype=np.float32))


def test_warm_start_loads_encoder_only(desk_config, tmp_path):
    donor = build_model(desk_config, RngStream(10))
    path = tmp_path / "donor.ntar"
    save_checkpoint(export_weights(donor), path)

    warm = desk_config.replace(ablation={"warm_start": str(path)})
    model = build_model(warm, RngStream(11)).state_dict()
    cold = build_model(desk_config, RngStream(11)).state_dict()
    reference = donor.state_dict()
    for name in model:
        expected = reference[name] if name.startswith("vit.") else cold[name]
        np.testing.assert_array_equal(model[name], expected)


def test_warm_start_with_mismatched_encoder_fails(desk_config, tmp_path):
    other = preset("desk", embed_dim=32, vit_heads=4)
    path = tmp_path / "other.ntar"
    save_checkpoint(export_weights(build_model(other, RngStream(0))), path)
    with pytest.raises(CheckpointError):
        build_model(desk_config.replace(ablation={"warm_start": str(path)}), RngStream(0))


def test_desk_parameter_count_matches_layer_sizes(desk_config):
    def wn_conv(cin, cout, k=3):
        return cout * cin * k + cout + cout  # v, g, bias

    def block(cin, cout):
        return wn_conv(cin, cout) + wn_conv(cout, cout) + (cout * cin + cout)

    tcn = block(129, 8) + block(8, 16) + block(16, 32)
    bridge = 16 * 8 + 2 * 16 + 64 * 16 * 32
    layer = 2 * (2 * 64) + 4 * (64 * 64 + 64) + (64 * 256 + 256) + (256 * 64 + 64)
    vit = (64 * 64 + 64) + 64 + 9 * 64 + 2 * layer + 2 * 64
    head = (64 * 32 + 32) + (32 * 2 + 2)
    assert tcn + bridge + vit + head == 150970
    assert count_parameters(build_model(desk_config, RngStream(0))) == 150970


def test_tcn_is_causal_at_every_step(desk_config):
    model = build_model(desk_config, RngStream(2)).eval()
    x = _inputs(desk_config, batch=1, seed=4)
    with no_grad():
        base = tcn_forward(model, x).data
        for t in range(desk_config.timepoints):
            moved = x.copy()
            moved[..., t] += 3.0
            out = tcn_forward(model, moved).data
            np.testing.assert_array_equal(out[..., :t], base[..., :t])


def test_eval_outputs_do_not_depend_on_batch_size(desk_config):
    x = _inputs(desk_config, batch=8, seed=5)
    model = build_model(desk_config, RngStream(6)).eval()
    with no_grad():
        batched = model(x).data
        single = np.concatenate([model(x[i:i + 1]).data for i in range(8)])
    # float32 matmuls block their sums by batch size, so agreement is to rounding
    np.testing.assert_allclose(single, batched, rtol=1e-4, atol=1e-5)


def test_eval_outputs_do_not_depend_on_batch_size_in_float64(desk_config, float64):
    x = _inputs(desk_config, batch=8, seed=5).astype(np.float64)
    model = build_model(desk_config, RngStream(6)).eval()
    with no_grad():
        batched = model(x).data
        single = np.concatenate([model(x[i:i + 1]).data for i in range(8)])
    np.testing.assert_allclose(single, batched, rtol=1e-12, atol=1e-12)


def test_one_small_adam_step_lowers_sample_loss(desk_config, tiny_dataset, float64):
    model = build_model(desk_config, RngStream(7)).eval()
    x = tiny_dataset.signals[:1].astype(np.float64)
    target = Tensor(tiny_dataset.labels[:1].astype(np.float64))
    opt = Adam(model.parameters(), AdamHyper(lr=1e-5))
    loss = mse_loss(model(x), target)
    loss.backward()
    opt.step()
    with no_grad():
        after = mse_loss(model(x), target)
    assert after.item() < loss.item()
