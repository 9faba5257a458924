import pytest

from phase3_model.config import ModelConfig, preset
from phase3_model.flops import (
    attention_flops,
    conv_flops,
    encoder_attention_flops,
    estimate_flops,
    flop_breakdown,
    linear_flops,
)


def test_counting_rules():
    assert conv_flops(2, 3, 1, 4, 1, 5, 2) == 2 * 3 * 2 * 4 * 5 * 2
    assert linear_flops(10, 4, batch=3, rows=2) == 3 * 2 * (2 * 4 * 10 + 4)
    assert attention_flops(2, 12, 15, 64) == 4 * 2 * 12 * 15 * 15 * 64


def test_flops_are_linear_in_batch():
    config = preset("desk")
    assert estimate_flops(config, 4) == 4 * estimate_flops(config, 1)


def test_attention_term_is_quadratic_in_positions():
    base = ModelConfig()
    coarse = base.replace(patch_projection_kernel=7, patch_projection_stride=7)
    assert base.positions == 15 and coarse.positions == 3
    ratio = encoder_attention_flops(base, 1) / encoder_attention_flops(coarse, 1)
    assert ratio == pytest.approx((15 / 3) ** 2)


def test_fewer_tokens_means_fewer_flops():
    base = preset("bench")
    counts = [estimate_flops(base.replace(patch_projection_kernel=k, patch_projection_stride=k), 1)
              for k in (1, 2, 7)]
    assert counts[0] > counts[1] > counts[2]
    assert counts[0] / counts[2] > 2.0


def test_removed_layers_count_zero():
    base = preset("desk")
    rows = {r.name: r.flops for r in flop_breakdown(base.replace(
        ablation={"remove_pointwise_conv": True}), 1)}
    assert rows["vit.patch_proj"] == 0
    full_rows = {r.name: r.flops for r in flop_breakdown(base, 1)}
    assert full_rows["vit.patch_proj"] > 0
    assert sum(full_rows.values()) - sum(rows.values()) == full_rows["vit.patch_proj"]


def test_breakdown_covers_every_encoder_layer():
    config = preset("desk")
    names = [r.name for r in flop_breakdown(config, 1)]
    for i in range(config.vit_depth):
        assert f"vit.layer{i}.attn.scores" in names
    assert names[-1] == "head.fc2"
