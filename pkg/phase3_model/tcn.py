"""Temporal convolutional network: residual blocks of causal dilated convolutions."""

from autodiff import functional as F
from autodiff.tensor import Tensor
from config.errors import DimensionError
from phase3_model.config import ModelConfig
from phase3_model.layers import Conv1d, Dropout, Module, WeightNormConv1d


class TemporalBlock(Module):
    """Two weight-normalised causal convs (relu + dropout after each) plus a residual path.

    The residual is projected with a 1x1 conv when the channel count changes.
    Sequence length is preserved.
    """

    def __init__(self, in_channels: int, out_channels: int, kernel: int, dilation: int,
                 dropout: float):
        super().__init__()
        self.conv1 = WeightNormConv1d(in_channels, out_channels, kernel, dilation)
        self.drop1 = Dropout(dropout)
        self.conv2 = WeightNormConv1d(out_channels, out_channels, kernel, dilation)
        self.drop2 = Dropout(dropout)
        self.downsample = Conv1d(in_channels, out_channels, 1) if in_channels != out_channels else None

    def forward(self, x: Tensor) -> Tensor:
        out = self.drop1(F.relu(self.conv1(x)))
        out = self.drop2(F.relu(self.conv2(out)))
        res = x if self.downsample is None else self.downsample(x)
        return F.relu(out + res)


class TCN(Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.in_channels = config.in_channels
        self.blocks = []
        channels = (config.in_channels, *config.tcn_channels)
        for i, (cin, cout) in enumerate(zip(channels[:-1], channels[1:])):
            block = TemporalBlock(cin, cout, config.tcn_kernel, config.tcn_dilation_base ** i,
                                  config.effective_tcn_dropout)
            setattr(self, f"block{i}", block)
            self.blocks.append(block)

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 3:
            raise DimensionError(f"TCN input must be [B, channels, T], got {x.shape}")
        if x.shape[1] != self.in_channels:
            raise DimensionError(
                f"expected {self.in_channels} input channels, got {x.shape[1]}", axis=1
            )
        for block in self.blocks:
            x = block(x)
        return x
