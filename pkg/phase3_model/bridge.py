"""Convolutional bridge between the TCN and the transformer encoder.

The TCN output [B, C, T] is read as a one-channel map [B, 1, C, T]. A temporal
conv (kernel (1, kw)) expands it to `bridge_filters` feature maps and shortens
time to W; batch norm and relu follow; a spatial conv whose kernel height
equals C compresses the channel axis to height 1 and lifts the features to
`embed_dim`, giving [B, embed_dim, 1, W].

Ablations swap a conv for a parameter-free op of the same output shape:
    remove_temporal_conv -> average pooling of the same geometry, broadcast to
                            `bridge_filters` maps
    remove_spatial_conv  -> mean over the height axis, then feature map
                            i % bridge_filters is copied to embedding channel i
"""

import numpy as np

from autodiff import functional as F
from autodiff.tensor import Tensor
from config.errors import ConfigError
from phase3_model.config import ModelConfig
from phase3_model.layers import BatchNorm2d, Conv2d, Module


class Bridge(Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        flags = config.ablation
        self.temporal = None if flags.remove_temporal_conv else Conv2d(
            1, config.bridge_filters, config.bridge_kernel_temporal,
            stride=config.bridge_stride_temporal, padding=config.bridge_padding_temporal,
            bias=False,
        )
        self.bn = BatchNorm2d(config.bridge_filters, momentum=config.bn_momentum)
        self.spatial = None if flags.remove_spatial_conv else Conv2d(
            config.bridge_filters, config.embed_dim, config.bridge_kernel_spatial, bias=False,
        )
        self.channel_map = np.arange(config.embed_dim) % config.bridge_filters

    def forward(self, x: Tensor) -> Tensor:
        cfg = self.config
        b, c, t = x.shape
        width = cfg.bridge_width(t)
        if width < 1:
            raise ConfigError(f"bridge temporal output width is {width} for T={t}")

        h = x.reshape(b, 1, c, t)
        if self.temporal is not None:
            h = self.temporal(h)
        else:
            h = F.avg_pool2d(h, cfg.bridge_kernel_temporal, cfg.bridge_stride_temporal,
                             cfg.bridge_padding_temporal)
            h = F.broadcast_to(h, (b, cfg.bridge_filters, h.shape[2], h.shape[3]))
        h = F.relu(self.bn(h))

        if self.spatial is not None:
            return self.spatial(h)
        h = h.mean(axis=2, keepdims=True)
        return h[:, self.channel_map]
