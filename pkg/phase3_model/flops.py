"""Analytic FLOP model.

Counting rules (one multiply-add = 2 FLOPs):
    conv        2 * Cout * Cin * kh * kw * Ho * Wo * B          (bias not counted)
    linear      B * rows * (2 * m * n + m)                      (m outputs, n inputs, with bias)
    attention   2 * B * h * T^2 * d for q.k^T plus the same for weights.v, T = tokens + cls
Normalisations, activations, residual adds and the parameter-free ablation
substitutes count zero.
"""

from dataclasses import dataclass

from phase3_model.config import ModelConfig


@dataclass(frozen=True)
class LayerFlops:
    name: str
    kind: str
    flops: int


def conv_flops(cin: int, cout: int, kh: int, kw: int, ho: int, wo: int, batch: int) -> int:
    return 2 * cout * cin * kh * kw * ho * wo * batch


def linear_flops(n_in: int, m_out: int, batch: int, rows: int = 1, bias: bool = True) -> int:
    return batch * rows * (2 * m_out * n_in + (m_out if bias else 0))


def attention_flops(batch: int, heads: int, tokens: int, head_dim: int) -> int:
    """Score and value products of one attention layer; quadratic in `tokens`."""
    return 2 * (2 * batch * heads * tokens * tokens * head_dim)


def flop_breakdown(config: ModelConfig, batch: int) -> list[LayerFlops]:
    rows: list[LayerFlops] = []
    t = config.timepoints
    channels = (config.in_channels, *config.tcn_channels)
    for i, (cin, cout) in enumerate(zip(channels[:-1], channels[1:])):
        k = config.tcn_kernel
        rows.append(LayerFlops(f"tcn.block{i}.conv1", "conv", conv_flops(cin, cout, 1, k, 1, t, batch)))
        rows.append(LayerFlops(f"tcn.block{i}.conv2", "conv", conv_flops(cout, cout, 1, k, 1, t, batch)))
        if cin != cout:
            rows.append(LayerFlops(f"tcn.block{i}.downsample", "conv",
                                   conv_flops(cin, cout, 1, 1, 1, t, batch)))

    height, width = config.bridge_height(), config.bridge_width()
    flags = config.ablation
    kh, kw = config.bridge_kernel_temporal
    rows.append(LayerFlops(
        "bridge.temporal", "conv",
        0 if flags.remove_temporal_conv
        else conv_flops(1, config.bridge_filters, kh, kw, height, width, batch),
    ))
    sh, sw = config.bridge_kernel_spatial
    rows.append(LayerFlops(
        "bridge.spatial", "conv",
        0 if flags.remove_spatial_conv
        else conv_flops(config.bridge_filters, config.embed_dim, sh, sw, 1, width, batch),
    ))

    e, n = config.embed_dim, config.token_count()
    rows.append(LayerFlops(
        "vit.patch_proj", "conv",
        0 if flags.remove_pointwise_conv
        else conv_flops(e, e, 1, config.patch_projection_kernel, 1, n, batch),
    ))
    positions = n + 1
    for i in range(config.vit_depth):
        for proj in ("q", "k", "v", "proj"):
            rows.append(LayerFlops(f"vit.layer{i}.attn.{proj}", "linear",
                                   linear_flops(e, e, batch, positions)))
        rows.append(LayerFlops(f"vit.layer{i}.attn.scores", "attention",
                               attention_flops(batch, config.vit_heads, positions, config.head_dim)))
        rows.append(LayerFlops(f"vit.layer{i}.mlp.fc1", "linear",
                               linear_flops(e, config.mlp_hidden, batch, positions)))
        rows.append(LayerFlops(f"vit.layer{i}.mlp.fc2", "linear",
                               linear_flops(config.mlp_hidden, e, batch, positions)))
    rows.append(LayerFlops("head.fc1", "linear", linear_flops(e, config.head_hidden, batch)))
    rows.append(LayerFlops("head.fc2", "linear", linear_flops(config.head_hidden, 2, batch)))
    return rows


def estimate_flops(config: ModelConfig, batch: int) -> int:
    return sum(row.flops for row in flop_breakdown(config, batch))


def encoder_attention_flops(config: ModelConfig, batch: int) -> int:
    """Quadratic attention term summed over all encoder layers."""
    return config.vit_depth * attention_flops(batch, config.vit_heads, config.positions,
                                              config.head_dim)
