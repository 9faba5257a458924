"""Differentiable operations.

Each operation is a Function subclass operating on raw numpy arrays plus a
thin wrapper that validates shapes and calls `Function.apply`. Wrappers raise
DimensionError (with the offending axis) for shape problems, ParameterError for
out-of-range hyperparameters and SingularityError where an operation is
undefined.

Conventions:
    * convolution is cross-correlation (no kernel flip)
    * relu'(0) = 0
    * dropout is inverted dropout; eval mode is the identity
    * batch_norm normalises with the biased batch variance and feeds the
      unbiased variance into the running estimate
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf

from autodiff.rng import RngStream
from autodiff.tensor import Function, Tensor
from config.errors import ContractError, DimensionError, ParameterError, SingularityError

IntPair = Union[int, tuple[int, int]]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _pair(value: IntPair) -> tuple[int, int]:
    if isinstance(value, int):
        return value, value
    a, b = value
    return int(a), int(b)


# ---------------------------------------------------------------------------
# Arithmetic
# ---------------------------------------------------------------------------

class Add(Function):
    op_name = "add"

    def forward(self, a, b):
        return a + b

    def backward(self, grad):
        return grad, grad


class Sub(Function):
    op_name = "sub"

    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        return grad, -grad


class Mul(Function):
    op_name = "mul"

    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return grad * self.b, grad * self.a


class Div(Function):
    op_name = "div"

    def forward(self, a, b):
        self.a, self.b = a, b
        return a / b

    def backward(self, grad):
        return grad / self.b, -grad * self.a / (self.b * self.b)


class PowScalar(Function):
    op_name = "pow"

    def forward(self, a, *, exponent):
        self.a, self.exponent = a, exponent
        return a ** exponent

    def backward(self, grad):
        return (grad * self.exponent * self.a ** (self.exponent - 1),)


def add(a: Tensor, b: Tensor) -> Tensor:
    return Add.apply(a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return Sub.apply(a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return Mul.apply(a, b)


def div(a: Tensor, b: Tensor) -> Tensor:
    return Div.apply(a, b)


def power(a: Tensor, exponent: float) -> Tensor:
    return PowScalar.apply(a, exponent=float(exponent))


# ---------------------------------------------------------------------------
# Shape and reduction
# ---------------------------------------------------------------------------

class Reshape(Function):
    op_name = "reshape"

    def forward(self, a, *, shape):
        self.in_shape = a.shape
        return a.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.in_shape),)


class Transpose(Function):
    op_name = "transpose"

    def forward(self, a, *, axes):
        self.axes = axes if axes is not None else tuple(reversed(range(a.ndim)))
        return np.transpose(a, self.axes)

    def backward(self, grad):
        return (np.transpose(grad, np.argsort(self.axes)),)


class GetItem(Function):
    op_name = "getitem"

    def forward(self, a, *, index):
        self.in_shape, self.dtype, self.index = a.shape, a.dtype, index
        return a[index]

    def backward(self, grad):
        out = np.zeros(self.in_shape, dtype=self.dtype)
        np.add.at(out, self.index, grad)
        return (out,)


class Concat(Function):
    op_name = "concat"

    def forward(self, *arrays, axis):
        self.axis = axis
        self.splits = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.splits, axis=self.axis))


class BroadcastTo(Function):
    op_name = "broadcast"

    def forward(self, a, *, shape):
        return np.broadcast_to(a, shape).copy()

    def backward(self, grad):
        # summed back to the input shape by the graph walker
        return (grad,)


class Sum(Function):
    op_name = "sum"

    def forward(self, a, *, axis, keepdims):
        self.in_shape, self.axis, self.keepdims = a.shape, axis, keepdims
        return np.sum(a, axis=axis, keepdims=keepdims)

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.in_shape),)


class Mean(Function):
    op_name = "mean"

    def forward(self, a, *, axis, keepdims):
        self.in_shape, self.axis, self.keepdims = a.shape, axis, keepdims
        out = np.mean(a, axis=axis, keepdims=keepdims)
        self.count = a.size // max(np.size(out), 1)
        return out

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad / self.count, self.in_shape),)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    known = int(np.prod([s for s in shape if s != -1]))
    if (-1 in shape and (known == 0 or a.size % known)) or (-1 not in shape and known != a.size):
        raise DimensionError(f"cannot reshape {a.shape} into {shape}")
    return Reshape.apply(a, shape=shape)


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    return Transpose.apply(a, axes=tuple(axes) if axes is not None else None)


def swap_last(a: Tensor) -> Tensor:
    axes = list(range(a.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(a, axes)


def index(a: Tensor, idx: Any) -> Tensor:
    return GetItem.apply(a, index=idx)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    ref = tensors[0].shape
    axis = axis % len(ref)
    for t in tensors[1:]:
        for ax, (a, b) in enumerate(zip(ref, t.shape)):
            if ax != axis and a != b:
                raise DimensionError(f"concat: size {a} vs {b}", axis=ax)
    return Concat.apply(*tensors, axis=axis)


def broadcast_to(a: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        np.broadcast_shapes(a.shape, tuple(shape))
    except ValueError as exc:
        raise DimensionError(f"cannot broadcast {a.shape} to {tuple(shape)}") from exc
    return BroadcastTo.apply(a, shape=tuple(shape))


def sum(a: Tensor, axis: Any = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    return Sum.apply(a, axis=axis, keepdims=keepdims)


def mean(a: Tensor, axis: Any = None, keepdims: bool = False) -> Tensor:
    return Mean.apply(a, axis=axis, keepdims=keepdims)


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------

class MatMul(Function):
    op_name = "matmul"

    def forward(self, a, b):
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        return grad @ np.swapaxes(self.b, -1, -2), np.swapaxes(self.a, -1, -2) @ grad


class Linear(Function):
    op_name = "linear"

    def forward(self, x, w, b=None):
        self.x, self.w = x, w
        out = x @ w.T
        if b is not None:
            out = out + b
        return out

    def backward(self, grad):
        m, n = self.w.shape
        g2 = grad.reshape(-1, m)
        gx = grad @ self.w
        gw = g2.T @ self.x.reshape(-1, n)
        if len(self.inputs) == 3:
            return gx, gw, g2.sum(axis=0)
        return gx, gw


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError("matmul needs operands of rank >= 2")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(
            f"matmul inner dimensions disagree: {a.shape} @ {b.shape}", axis=a.ndim - 1
        )
    return MatMul.apply(a, b)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x @ weight.T + bias for weight of shape [m, n]."""
    if weight.ndim != 2:
        raise DimensionError(f"linear weight must be [m, n], got {weight.shape}")
    if x.shape[-1] != weight.shape[1]:
        raise DimensionError(
            f"linear: input features {x.shape[-1]} != weight columns {weight.shape[1]}",
            axis=x.ndim - 1,
        )
    if bias is not None and bias.shape != (weight.shape[0],):
        raise DimensionError(f"linear bias must be [{weight.shape[0]}], got {bias.shape}", axis=0)
    inputs = (x, weight) if bias is None else (x, weight, bias)
    return Linear.apply(*inputs)


# ---------------------------------------------------------------------------
# Convolution and pooling
# ---------------------------------------------------------------------------

def _windows(xp: np.ndarray, kernel: tuple[int, int], stride: tuple[int, int],
             dilation: tuple[int, int]) -> np.ndarray:
    """Strided view [B, C, Ho, Wo, kh, kw] over a padded NCHW array."""
    (kh, kw), (sh, sw), (dh, dw) = kernel, stride, dilation
    span = ((kh - 1) * dh + 1, (kw - 1) * dw + 1)
    view = sliding_window_view(xp, span, axis=(2, 3))
    return view[:, :, ::sh, ::sw, ::dh, ::dw]


def _scatter_windows(dwin: np.ndarray, padded_shape: tuple[int, ...],
                     stride: tuple[int, int], dilation: tuple[int, int]) -> np.ndarray:
    """Adjoint of `_windows`: accumulate [B, C, Ho, Wo, kh, kw] back onto the padded input."""
    (sh, sw), (dh, dw) = stride, dilation
    _, _, ho, wo, kh, kw = dwin.shape
    out = np.zeros(padded_shape, dtype=dwin.dtype)
    for i in range(kh):
        rows = slice(i * dh, i * dh + sh * (ho - 1) + 1, sh)
        for j in range(kw):
            cols = slice(j * dw, j * dw + sw * (wo - 1) + 1, sw)
            out[:, :, rows, cols] += dwin[:, :, :, :, i, j]
    return out


def _unpad(a: np.ndarray, padding: tuple[int, int, int, int]) -> np.ndarray:
    top, bottom, left, right = padding
    return a[:, :, top:a.shape[2] - bottom, left:a.shape[3] - right]


class Conv2d(Function):
    op_name = "conv2d"

    def forward(self, x, w, b=None, *, stride, padding, dilation):
        top, bottom, left, right = padding
        self.stride, self.padding, self.dilation = stride, padding, dilation
        xp = np.pad(x, ((0, 0), (0, 0), (top, bottom), (left, right)))
        self.padded_shape = xp.shape
        self.win = _windows(xp, w.shape[2:], stride, dilation)
        self.w = w
        out = np.tensordot(self.win, w, axes=([1, 4, 5], [1, 2, 3]))  # [B, Ho, Wo, Cout]
        out = np.ascontiguousarray(out.transpose(0, 3, 1, 2))
        if b is not None:
            out += b[None, :, None, None]
        return out

    def backward(self, grad):
        gw = np.tensordot(grad, self.win, axes=([0, 2, 3], [0, 2, 3]))
        dwin = np.tensordot(grad, self.w, axes=([1], [0]))  # [B, Ho, Wo, Cin, kh, kw]
        dwin = dwin.transpose(0, 3, 1, 2, 4, 5)
        gx = _unpad(_scatter_windows(dwin, self.padded_shape, self.stride, self.dilation),
                    self.padding)
        if len(self.inputs) == 3:
            return gx, gw, grad.sum(axis=(0, 2, 3))
        return gx, gw


class AvgPool2d(Function):
    """Fixed window average; padded zeros count towards the mean."""

    op_name = "avg_pool2d"

    def forward(self, x, *, kernel, stride, padding):
        top, bottom, left, right = padding
        self.kernel, self.stride, self.padding = kernel, stride, padding
        xp = np.pad(x, ((0, 0), (0, 0), (top, bottom), (left, right)))
        self.padded_shape = xp.shape
        return _windows(xp, kernel, stride, (1, 1)).mean(axis=(4, 5))

    def backward(self, grad):
        kh, kw = self.kernel
        dwin = np.broadcast_to((grad / (kh * kw))[..., None, None], grad.shape + (kh, kw))
        return (_unpad(_scatter_windows(dwin, self.padded_shape, self.stride, (1, 1)),
                       self.padding),)


def _pad4(padding: Union[int, Sequence[int]]) -> tuple[int, int, int, int]:
    """Accept p, (ph, pw) or (top, bottom, left, right)."""
    if isinstance(padding, int):
        return padding, padding, padding, padding
    padding = tuple(int(p) for p in padding)
    if len(padding) == 2:
        ph, pw = padding
        return ph, ph, pw, pw
    if len(padding) == 4:
        return padding  # type: ignore[return-value]
    raise ParameterError(f"padding must have 1, 2 or 4 entries, got {padding}")


def conv_output_size(size: int, kernel: int, stride: int, pad_total: int, dilation: int = 1) -> int:
    return (size + pad_total - dilation * (kernel - 1) - 1) // stride + 1


def _check_window(name: str, x_shape: tuple[int, ...], kernel: tuple[int, int],
                  stride: tuple[int, int], padding: tuple[int, int, int, int],
                  dilation: tuple[int, int]) -> None:
    if min(stride) < 1:
        raise ParameterError(f"{name}: strides must be >= 1, got {stride}")
    if min(dilation) < 1:
        raise ParameterError(f"{name}: dilation must be >= 1, got {dilation}")
    if min(padding) < 0:
        raise ParameterError(f"{name}: padding must be >= 0, got {padding}")
    top, bottom, left, right = padding
    for axis, size, k, d, pad in ((2, x_shape[2], kernel[0], dilation[0], top + bottom),
                                  (3, x_shape[3], kernel[1], dilation[1], left + right)):
        if (k - 1) * d + 1 > size + pad:
            raise DimensionError(
                f"{name}: effective kernel {(k - 1) * d + 1} exceeds padded size {size + pad}",
                axis=axis,
            )


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
           stride: IntPair = 1, padding: Union[int, Sequence[int]] = 0,
           dilation: IntPair = 1) -> Tensor:
    """2-D cross-correlation. x [B,Cin,H,W], weight [Cout,Cin,kh,kw] -> [B,Cout,Ho,Wo]."""
    if x.ndim != 4:
        raise DimensionError(f"conv2d input must be [B,C,H,W], got {x.shape}")
    if weight.ndim != 4:
        raise DimensionError(f"conv2d weight must be [Cout,Cin,kh,kw], got {weight.shape}")
    if x.shape[1] != weight.shape[1]:
        raise DimensionError(
            f"conv2d: input has {x.shape[1]} channels, weight expects {weight.shape[1]}", axis=1
        )
    if bias is not None and bias.shape != (weight.shape[0],):
        raise DimensionError(f"conv2d bias must be [{weight.shape[0]}], got {bias.shape}", axis=0)
    stride, dilation, padding = _pair(stride), _pair(dilation), _pad4(padding)
    _check_window("conv2d", x.shape, weight.shape[2:], stride, padding, dilation)
    inputs = (x, weight) if bias is None else (x, weight, bias)
    return Conv2d.apply(*inputs, stride=stride, padding=padding, dilation=dilation)


def conv1d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1,
           padding: IntPair = 0, dilation: int = 1, causal: bool = False) -> Tensor:
    """1-D cross-correlation. x [B,Cin,L], weight [Cout,Cin,k] -> [B,Cout,Lo].

    `padding` is symmetric (int) or (left, right). causal=True pads
    (k - 1) * dilation zeros on the left only, so output[t] sees input[<= t].
    """
    if x.ndim != 3:
        raise DimensionError(f"conv1d input must be [B,C,L], got {x.shape}")
    if weight.ndim != 3:
        raise DimensionError(f"conv1d weight must be [Cout,Cin,k], got {weight.shape}")
    if x.shape[1] != weight.shape[1]:
        raise DimensionError(
            f"conv1d: input has {x.shape[1]} channels, weight expects {weight.shape[1]}", axis=1
        )
    k = weight.shape[2]
    if causal:
        left, right = (k - 1) * dilation, 0
    else:
        left, right = _pair(padding)
    if (k - 1) * dilation + 1 > x.shape[2] + left + right:
        raise DimensionError(
            f"conv1d: effective kernel {(k - 1) * dilation + 1} exceeds padded length "
            f"{x.shape[2] + left + right}",
            axis=2,
        )
    b, cin, length = x.shape
    out = conv2d(
        x.reshape(b, cin, 1, length),
        weight.reshape(weight.shape[0], cin, 1, k),
        bias,
        stride=(1, stride),
        padding=(0, 0, left, right),
        dilation=(1, dilation),
    )
    return out.reshape(b, weight.shape[0], out.shape[3])


def avg_pool2d(x: Tensor, kernel: IntPair, stride: Optional[IntPair] = None,
               padding: Union[int, Sequence[int]] = 0) -> Tensor:
    if x.ndim != 4:
        raise DimensionError(f"avg_pool2d input must be [B,C,H,W], got {x.shape}")
    kernel = _pair(kernel)
    stride = _pair(stride) if stride is not None else kernel
    padding = _pad4(padding)
    _check_window("avg_pool2d", x.shape, kernel, stride, padding, (1, 1))
    return AvgPool2d.apply(x, kernel=kernel, stride=stride, padding=padding)


def avg_pool1d(x: Tensor, kernel: int, stride: Optional[int] = None, padding: int = 0) -> Tensor:
    if x.ndim != 3:
        raise DimensionError(f"avg_pool1d input must be [B,C,L], got {x.shape}")
    b, c, length = x.shape
    out = avg_pool2d(x.reshape(b, c, 1, length), (1, kernel),
                     (1, stride if stride is not None else kernel), (0, 0, padding, padding))
    return out.reshape(b, c, out.shape[3])


# ---------------------------------------------------------------------------
# Normalisation
# ---------------------------------------------------------------------------

@dataclass
class BatchNormState:
    """Running statistics of one batch-norm layer."""

    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1

    @classmethod
    def fresh(cls, channels: int, momentum: float = 0.1, dtype: Any = np.float32) -> "BatchNormState":
        return cls(np.zeros(channels, dtype=dtype), np.ones(channels, dtype=dtype), momentum)


class BatchNormFn(Function):
    op_name = "batch_norm"

    def forward(self, x, gamma, beta, *, mean, var, eps, training):
        self.training = training
        self.axes = (0,) + tuple(range(2, x.ndim))
        bshape = (1, -1) + (1,) * (x.ndim - 2)
        self.inv_std = (1.0 / np.sqrt(var + eps)).reshape(bshape)
        self.xhat = (x - mean.reshape(bshape)) * self.inv_std
        self.gamma = gamma.reshape(bshape)
        return self.gamma * self.xhat + beta.reshape(bshape)

    def backward(self, grad):
        ggamma = np.sum(grad * self.xhat, axis=self.axes)
        gbeta = np.sum(grad, axis=self.axes)
        gxhat = grad * self.gamma
        if not self.training:
            return gxhat * self.inv_std, ggamma, gbeta
        n = grad.size // grad.shape[1]
        gx = (self.inv_std / n) * (
            n * gxhat
            - np.sum(gxhat, axis=self.axes, keepdims=True)
            - self.xhat * np.sum(gxhat * self.xhat, axis=self.axes, keepdims=True)
        )
        return gx, ggamma, gbeta


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, state: BatchNormState,
               training: bool, eps: float = 1e-5) -> Tensor:
    """Per-channel normalisation over the batch and spatial axes of [B,C,...].

    Train mode updates `state` in place with momentum `state.momentum`
    (running = (1 - m) * running + m * batch_stat); eval mode reads it only.
    """
    if x.ndim < 2:
        raise DimensionError(f"batch_norm input must be [B,C,...], got {x.shape}")
    channels = x.shape[1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise DimensionError(
            f"batch_norm affine parameters must be [{channels}], got {gamma.shape}/{beta.shape}",
            axis=1,
        )
    if not training:
        return BatchNormFn.apply(x, gamma, beta, mean=state.running_mean,
                                 var=state.running_var, eps=eps, training=False)
    if x.shape[0] < 2:
        raise DimensionError("batch_norm in train mode needs a batch of at least 2", axis=0)
    axes = (0,) + tuple(range(2, x.ndim))
    mean = x.data.mean(axis=axes)
    var = x.data.var(axis=axes)
    n = x.size // channels
    m = state.momentum
    dtype = state.running_mean.dtype
    state.running_mean = ((1 - m) * state.running_mean + m * mean).astype(dtype)
    state.running_var = ((1 - m) * state.running_var + m * var * n / (n - 1)).astype(dtype)
    return BatchNormFn.apply(x, gamma, beta, mean=mean, var=var, eps=eps, training=True)


class LayerNormFn(Function):
    op_name = "layer_norm"

    def forward(self, x, gamma, beta, *, eps):
        mu = x.mean(axis=-1, keepdims=True)
        self.inv_std = 1.0 / np.sqrt(x.var(axis=-1, keepdims=True) + eps)
        self.xhat = (x - mu) * self.inv_std
        self.gamma = gamma
        return self.xhat * gamma + beta

    def backward(self, grad):
        d = grad.shape[-1]
        lead = tuple(range(grad.ndim - 1))
        gxhat = grad * self.gamma
        gx = (self.inv_std / d) * (
            d * gxhat
            - gxhat.sum(axis=-1, keepdims=True)
            - self.xhat * (gxhat * self.xhat).sum(axis=-1, keepdims=True)
        )
        return gx, (grad * self.xhat).sum(axis=lead), grad.sum(axis=lead)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-6) -> Tensor:
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(f"layer_norm affine parameters must be [{d}]", axis=x.ndim - 1)
    return LayerNormFn.apply(x, gamma, beta, eps=eps)


class WeightNormFn(Function):
    op_name = "weight_norm"

    def forward(self, v, g):
        self.axes = tuple(range(1, v.ndim))
        bshape = (-1,) + (1,) * (v.ndim - 1)
        self.norm = np.sqrt(np.sum(v * v, axis=self.axes, keepdims=True))
        self.u = v / self.norm
        self.g = g.reshape(bshape)
        return self.g * self.u

    def backward(self, grad):
        proj = np.sum(grad * self.u, axis=self.axes, keepdims=True)
        gv = (self.g / self.norm) * (grad - self.u * proj)
        return gv, proj.reshape(-1)


def weight_norm(v: Tensor, g: Tensor) -> Tensor:
    """w = g * v / ||v||, norm per output channel (axis 0) over all remaining axes."""
    if g.shape != (v.shape[0],):
        raise DimensionError(f"weight_norm needs one scale per output channel, got {g.shape}",
                             axis=0)
    norms = np.sqrt(np.sum(v.data.astype(np.float64) ** 2, axis=tuple(range(1, v.ndim))))
    if np.any(norms == 0):
        zero = np.flatnonzero(norms == 0).tolist()
        raise SingularityError(f"weight_norm: zero-norm direction for output channel(s) {zero}")
    return WeightNormFn.apply(v, g)


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------

class ReLU(Function):
    op_name = "relu"

    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, 0).astype(x.dtype)

    def backward(self, grad):
        return (grad * self.mask,)


class GELU(Function):
    """Exact GELU: x * Phi(x)."""

    op_name = "gelu"

    def forward(self, x):
        self.x = x
        self.cdf = 0.5 * (1.0 + erf(x / _SQRT2))
        return (x * self.cdf).astype(x.dtype)

    def backward(self, grad):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * self.x * self.x)
        return ((grad * (self.cdf + self.x * pdf)).astype(grad.dtype),)


class Softmax(Function):
    op_name = "softmax"

    def forward(self, x):
        e = np.exp(x - x.max(axis=-1, keepdims=True))
        self.s = e / e.sum(axis=-1, keepdims=True)
        return self.s

    def backward(self, grad):
        return (self.s * (grad - (grad * self.s).sum(axis=-1, keepdims=True)),)


def relu(x: Tensor) -> Tensor:
    return ReLU.apply(x)


def gelu(x: Tensor) -> Tensor:
    return GELU.apply(x)


def softmax(x: Tensor) -> Tensor:
    """Normalise over the last axis."""
    return Softmax.apply(x)


def dropout(x: Tensor, rate: float, training: bool, rng: Optional[RngStream] = None) -> Tensor:
    """Inverted dropout: zero with probability `rate`, scale survivors by 1 / (1 - rate)."""
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ContractError("dropout in train mode needs an RngStream")
    keep = 1.0 - rate
    scale = rng.bernoulli_mask(keep, x.shape).astype(x.dtype) / x.dtype.type(keep)
    return mul(x, Tensor(scale))


def attention(q: Tensor, k: Tensor, v: Tensor) -> Tensor:
    """softmax(q @ k^T / sqrt(d)) @ v over [B, h, T, d] operands."""
    if q.ndim != 4:
        raise DimensionError(f"attention operands must be [B,h,T,d], got {q.shape}")
    for other in (k, v):
        for axis, (a, b) in enumerate(zip(q.shape, other.shape)):
            if a != b:
                raise DimensionError(f"attention: {q.shape} vs {other.shape}", axis=axis)
    d = q.shape[-1]
    scores = matmul(q, swap_last(k)) * (1.0 / math.sqrt(d))
    return matmul(softmax(scores), v)


_ELEMENTWISE: dict[str, Callable[..., Tensor]] = {
    "relu": relu,
    "gelu": gelu,
    "softmax": softmax,
    "layer_norm": layer_norm,
    "dropout": dropout,
}


def elementwise(op: str, x: Tensor, **params: Any) -> Tensor:
    """Dispatch one of relu | gelu | softmax | layer_norm | dropout by name."""
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ContractError(f"unknown elementwise op {op!r}; choose from {sorted(_ELEMENTWISE)}")
    return fn(x, **params)
