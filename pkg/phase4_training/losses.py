"""Training loss and evaluation metric."""

from typing import Union

import numpy as np

from autodiff.tensor import Tensor
from config.errors import DimensionError

ArrayOrTensor = Union[np.ndarray, Tensor]


def _check(pred_shape: tuple, target_shape: tuple) -> None:
    if pred_shape != target_shape:
        raise DimensionError(f"prediction {pred_shape} and target {target_shape} differ")


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean over all B * 2 elements of the squared difference."""
    _check(pred.shape, target.shape)
    diff = pred - target
    return (diff * diff).mean()


def rmse_mm(pred: ArrayOrTensor, target: ArrayOrTensor) -> float:
    """sqrt(mean over samples of dx^2 + dy^2): root-mean squared Euclidean distance."""
    p = pred.data if isinstance(pred, Tensor) else np.asarray(pred)
    t = target.data if isinstance(target, Tensor) else np.asarray(target)
    _check(p.shape, t.shape)
    d = p.astype(np.float64) - t.astype(np.float64)
    return float(np.sqrt(np.mean(np.sum(d * d, axis=-1))))
