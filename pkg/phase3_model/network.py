"""EEGViT-TCNet: TCN -> convolutional bridge -> transformer encoder -> regression head.

Parameter naming scheme (stable; used by checkpoints):

    tcn.block{i}.conv{1,2}.{v,g,bias}      weight-normalised causal convs
    tcn.block{i}.downsample.{weight,bias}  1x1 residual projection (channel change only)
    bridge.temporal.weight                 (filters, 1, 1, kw)
    bridge.bn.{gamma,beta}                 + buffers running_mean / running_var
    bridge.spatial.weight                  (embed, filters, C_last, 1)
    vit.patch_proj.{weight,bias}           (embed, embed, k)
    vit.cls_token, vit.pos_embed
    vit.layer{i}.{norm1,norm2}.{gamma,beta}
    vit.layer{i}.attn.{q,k,v,proj}.{weight,bias}
    vit.layer{i}.mlp.{fc1,fc2}.{weight,bias}
    vit.norm.{gamma,beta}
    head.fc1.{weight,bias}, head.fc2.{weight,bias}
"""

from typing import Union

import numpy as np

from autodiff.rng import RngStream
from autodiff.tensor import Tensor
from config.errors import DimensionError
from phase3_model.bridge import Bridge
from phase3_model.checkpoint import import_weights, load_checkpoint
from phase3_model.config import ModelConfig
from phase3_model.layers import Module, count_parameters
from phase3_model.tcn import TCN
from phase3_model.vit import RegressionHead, ViTEncoder

ArrayOrTensor = Union[np.ndarray, Tensor]


class EEGViTTCNet(Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.tcn = TCN(config)
        self.bridge = Bridge(config)
        self.vit = ViTEncoder(config)
        self.head = RegressionHead(config)

    def forward(self, x: ArrayOrTensor) -> Tensor:
        x = _as_input(self, x)
        return self.head(self.vit(self.bridge(self.tcn(x))))


Model = EEGViTTCNet


def _as_input(model: Module, x: ArrayOrTensor) -> Tensor:
    dtype = model.head.fc2.weight.dtype
    if isinstance(x, Tensor):
        return x if x.dtype == dtype else Tensor(x.data.astype(dtype))
    return Tensor(np.asarray(x, dtype=dtype))


def build_model(config: ModelConfig, rng: RngStream) -> Model:
    """Construct and initialise a model.

    Conv and linear weights are uniform in +-1/sqrt(fan_in), biases zero,
    cls token and position embeddings truncated normal (std 0.02, +-2 std),
    weight-norm gains equal to the initial direction norms, normalisation
    scales one. Under `ablation.warm_start` the encoder (``vit.*``) is then
    loaded from the checkpoint; the head keeps its fresh initialisation.
    """
    model = EEGViTTCNet(config).initialize(rng)
    if config.ablation.warm_start:
        import_weights(model, load_checkpoint(config.ablation.warm_start), strict=False)
    return model


def tcn_forward(model: Model, x: ArrayOrTensor) -> Tensor:
    """[B, in_channels, T] -> [B, C_last, T]."""
    return model.tcn(_as_input(model, x))


def bridge_forward(model: Model, x: ArrayOrTensor) -> Tensor:
    """[B, C_last, T] -> [B, embed_dim, 1, W]."""
    x = _as_input(model, x)
    if x.ndim != 3 or x.shape[1] != model.config.tcn_channels[-1]:
        raise DimensionError(
            f"bridge input must be [B, {model.config.tcn_channels[-1]}, T], got {x.shape}", axis=1
        )
    return model.bridge(x)


def vit_forward(model: Model, x: ArrayOrTensor) -> Tensor:
    """[B, embed_dim, 1, W] -> [B, 2]."""
    return model.head(model.vit(_as_input(model, x)))


def forward(model: Model, x: ArrayOrTensor) -> Tensor:
    return model(x)


__all__ = [
    "EEGViTTCNet",
    "Model",
    "build_model",
    "bridge_forward",
    "count_parameters",
    "forward",
    "tcn_forward",
    "vit_forward",
]
