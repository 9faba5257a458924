"""Module base class and the parameterised layers the network is assembled from.

Modules register Parameters and child Modules on attribute assignment, so
parameter names follow attribute paths (``tcn.block0.conv1.v``). Parameters
are created with placeholder values; `Module.initialize(rng)` fills them,
giving every module its own RNG substream keyed by its dotted name.
"""

from __future__ import annotations

from collections import OrderedDict
from typing import Any, Iterator, Optional

import numpy as np

from autodiff import functional as F
from autodiff.rng import RngStream
from autodiff.tensor import Parameter, Tensor, default_dtype
from config.model_profile import BN_EPS, BN_MOMENTUM, INIT_EMBED_STD, LN_EPS


class Module:
    def __init__(self) -> None:
        object.__setattr__(self, "_parameters", OrderedDict())
        object.__setattr__(self, "_modules", OrderedDict())
        object.__setattr__(self, "training", True)

    def __setattr__(self, name: str, value: Any) -> None:
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def __call__(self, *args: Any, **kwargs: Any) -> Tensor:
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Tensor:
        raise NotImplementedError

    # --- traversal -----------------------------------------------------------

    def named_modules(self, prefix: str = "") -> Iterator[tuple[str, "Module"]]:
        yield prefix, self
        for name, child in self._modules.items():
            yield from child.named_modules(f"{prefix}.{name}" if prefix else name)

    def named_parameters(self) -> Iterator[tuple[str, Parameter]]:
        for prefix, module in self.named_modules():
            for name, param in module._parameters.items():
                yield (f"{prefix}.{name}" if prefix else name), param

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def local_buffers(self) -> dict[str, np.ndarray]:
        """Non-trainable state owned directly by this module."""
        return {}

    def set_local_buffer(self, name: str, value: np.ndarray) -> None:
        raise KeyError(name)

    def named_buffers(self) -> Iterator[tuple[str, np.ndarray]]:
        for prefix, module in self.named_modules():
            for name, buf in module.local_buffers().items():
                yield (f"{prefix}.{name}" if prefix else name), buf

    # --- state ----------------------------------------------------------------

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        """Copies of all parameters followed by all buffers."""
        state: OrderedDict[str, np.ndarray] = OrderedDict()
        for name, p in self.named_parameters():
            state[name] = p.data.copy()
        for name, buf in self.named_buffers():
            state[name] = buf.copy()
        return state

    def assign(self, name: str, value: np.ndarray) -> None:
        """Overwrite one parameter or buffer by dotted name."""
        prefix, _, leaf = name.rpartition(".")
        module = dict(self.named_modules())[prefix]
        if leaf in module._parameters:
            param = module._parameters[leaf]
            param.data = np.array(value, dtype=param.dtype)
        else:
            module.set_local_buffer(leaf, value)

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for name, value in state.items():
            self.assign(name, value)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def train(self, mode: bool = True) -> "Module":
        for _, module in self.named_modules():
            object.__setattr__(module, "training", mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    # --- initialisation ---------------------------------------------------------

    def reset_parameters(self, rng: RngStream) -> None:
        """Initialise this module's own parameters from `rng`."""

    def initialize(self, rng: RngStream) -> "Module":
        for name, module in self.named_modules():
            module.reset_parameters(rng.substream(name or "<root>"))
        return self


def _zeros(*shape: int) -> Parameter:
    return Parameter(np.zeros(shape, dtype=default_dtype()))


def _fan_in_uniform(param: Parameter, fan_in: int, rng: RngStream) -> None:
    bound = 1.0 / np.sqrt(fan_in)
    param.data = rng.uniform(-bound, bound, param.shape, dtype=param.dtype)


class Linear(Module):
    """y = x @ weight.T + bias, weight [out, in]."""

    def __init__(self, in_features: int, out_features: int, bias: bool = True):
        super().__init__()
        self.in_features = in_features
        self.weight = _zeros(out_features, in_features)
        self.bias = _zeros(out_features) if bias else None

    def reset_parameters(self, rng: RngStream) -> None:
        _fan_in_uniform(self.weight, self.in_features, rng)
        if self.bias is not None:
            self.bias.data = np.zeros_like(self.bias.data)

    def forward(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)


class Conv1d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel: int, stride: int = 1,
                 padding: int = 0, bias: bool = True):
        super().__init__()
        self.stride, self.padding = stride, padding
        self.weight = _zeros(out_channels, in_channels, kernel)
        self.bias = _zeros(out_channels) if bias else None

    def reset_parameters(self, rng: RngStream) -> None:
        _, cin, k = self.weight.shape
        _fan_in_uniform(self.weight, cin * k, rng)
        if self.bias is not None:
            self.bias.data = np.zeros_like(self.bias.data)

    def forward(self, x: Tensor) -> Tensor:
        return F.conv1d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class Conv2d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel: tuple[int, int],
                 stride: tuple[int, int] = (1, 1), padding: tuple[int, int] = (0, 0),
                 bias: bool = True):
        super().__init__()
        self.stride, self.padding = tuple(stride), tuple(padding)
        self.weight = _zeros(out_channels, in_channels, *kernel)
        self.bias = _zeros(out_channels) if bias else None

    def reset_parameters(self, rng: RngStream) -> None:
        _, cin, kh, kw = self.weight.shape
        _fan_in_uniform(self.weight, cin * kh * kw, rng)
        if self.bias is not None:
            self.bias.data = np.zeros_like(self.bias.data)

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class WeightNormConv1d(Module):
    """Causal dilated conv1d with weight = g * v / ||v|| (norm per output channel)."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int, dilation: int = 1):
        super().__init__()
        self.dilation = dilation
        self.v = _zeros(out_channels, in_channels, kernel)
        self.g = _zeros(out_channels)
        self.bias = _zeros(out_channels)

    def reset_parameters(self, rng: RngStream) -> None:
        _, cin, k = self.v.shape
        _fan_in_uniform(self.v, cin * k, rng)
        # start with weight == v
        norms = np.sqrt(np.sum(self.v.data.astype(np.float64) ** 2, axis=(1, 2)))
        self.g.data = norms.astype(self.g.dtype)
        self.bias.data = np.zeros_like(self.bias.data)

    def weight(self) -> Tensor:
        return F.weight_norm(self.v, self.g)

    def forward(self, x: Tensor) -> Tensor:
        return F.conv1d(x, self.weight(), self.bias, dilation=self.dilation, causal=True)


class BatchNorm2d(Module):
    def __init__(self, channels: int, momentum: float = BN_MOMENTUM, eps: float = BN_EPS):
        super().__init__()
        self.eps = eps
        self.gamma = _zeros(channels)
        self.beta = _zeros(channels)
        self.state = F.BatchNormState.fresh(channels, momentum, dtype=default_dtype())

    def reset_parameters(self, rng: RngStream) -> None:
        self.gamma.data = np.ones_like(self.gamma.data)
        self.beta.data = np.zeros_like(self.beta.data)
        channels = self.gamma.shape[0]
        self.state = F.BatchNormState.fresh(channels, self.state.momentum, dtype=self.gamma.dtype)

    def local_buffers(self) -> dict[str, np.ndarray]:
        return {"running_mean": self.state.running_mean, "running_var": self.state.running_var}

    def set_local_buffer(self, name: str, value: np.ndarray) -> None:
        if name not in ("running_mean", "running_var"):
            raise KeyError(name)
        setattr(self.state, name, np.array(value, dtype=self.gamma.dtype))

    def forward(self, x: Tensor) -> Tensor:
        return F.batch_norm(x, self.gamma, self.beta, self.state, self.training, self.eps)


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = LN_EPS):
        super().__init__()
        self.eps = eps
        self.gamma = _zeros(dim)
        self.beta = _zeros(dim)

    def reset_parameters(self, rng: RngStream) -> None:
        self.gamma.data = np.ones_like(self.gamma.data)
        self.beta.data = np.zeros_like(self.beta.data)

    def forward(self, x: Tensor) -> Tensor:
        return F.layer_norm(x, self.gamma, self.beta, self.eps)


class Dropout(Module):
    """Inverted dropout drawing masks from a private stream."""

    def __init__(self, rate: float):
        super().__init__()
        self.rate = rate
        self.rng: Optional[RngStream] = None

    def reset_parameters(self, rng: RngStream) -> None:
        self.rng = rng.substream("mask")

    def forward(self, x: Tensor) -> Tensor:
        return F.dropout(x, self.rate, self.training, self.rng)


def embedding(*shape: int) -> Parameter:
    return _zeros(*shape)


def init_embedding(param: Parameter, rng: RngStream) -> None:
    param.data = rng.truncated_normal(INIT_EMBED_STD, param.shape, dtype=param.dtype)


def count_parameters(module: Module) -> int:
    return int(sum(p.size for p in module.parameters()))
