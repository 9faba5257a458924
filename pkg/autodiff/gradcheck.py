"""Finite-difference gradient checking."""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from autodiff.rng import RngStream
from autodiff.tensor import Tensor, no_grad
from config.errors import ContractError

DEFAULT_EPS = 1e-5
REL_FLOOR = 1e-8


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = REL_FLOOR) -> np.ndarray:
    """|a - n| / max(|a|, |n|, floor), elementwise."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def numeric_gradient(f: Callable[[np.ndarray], float], x: np.ndarray,
                     eps: float = DEFAULT_EPS) -> np.ndarray:
    """Central differences of a scalar function of a raw array."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + eps
        plus = f(x)
        x[idx] = orig - eps
        minus = f(x)
        x[idx] = orig
        grad[idx] = (plus - minus) / (2 * eps)
    return grad


def away_from_kinks(x: np.ndarray, kinks: Sequence[float], margin: float) -> np.ndarray:
    """Mask of coordinates farther than `margin` from every non-differentiable point."""
    mask = np.ones(x.shape, dtype=bool)
    for k in kinks:
        mask &= np.abs(x - k) > margin
    return mask


def _scalarize(out: Tensor, projection: Optional[np.ndarray]) -> Tensor:
    if out.size == 1:
        return out.sum()
    return (out * Tensor(projection)).sum()


def grad_check(
    f: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    eps: float = DEFAULT_EPS,
    kinks: Sequence[float] = (),
    masks: Optional[Sequence[Optional[np.ndarray]]] = None,
    max_coords: Optional[int] = None,
    seed: int = 0,
    floor: float = REL_FLOOR,
    kink_retry: bool = False,
) -> float:
    """Maximum relative error between backward() and central differences.

    Non-scalar outputs are reduced with a fixed random projection so every
    output coordinate contributes. Coordinates within 10 * eps of a value in
    `kinks` (for example 0.0 for relu) are skipped, as are coordinates
    excluded by `masks`. `max_coords` samples that many coordinates per input.
    `f` must be deterministic across calls (no live dropout).

    With `kink_retry`, a coordinate whose error exceeds 1e-6 is measured again
    with a tenth of the step and the smaller error kept; this handles
    difference intervals that straddle a relu kink deep inside a network.
    """
    for t in inputs:
        if t.dtype != np.float64:
            raise ContractError(f"grad_check needs float64 inputs, got {t.dtype}")

    rng = RngStream(seed)
    first = f(*inputs)
    projection = rng.normal(1.0, first.shape) if first.size > 1 else None

    for t in inputs:
        t.zero_grad()
    _scalarize(f(*inputs), projection).backward()

    def objective() -> float:
        with no_grad():
            return _scalarize(f(*inputs), projection).item()

    def central(t: Tensor, idx: tuple, step: float) -> float:
        orig = t.data[idx]
        t.data[idx] = orig + step
        plus = objective()
        t.data[idx] = orig - step
        minus = objective()
        t.data[idx] = orig
        return (plus - minus) / (2 * step)

    worst = 0.0
    for n, t in enumerate(inputs):
        if not t.requires_grad:
            continue
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        mask = away_from_kinks(t.data, kinks, 10 * eps) if kinks else np.ones(t.shape, dtype=bool)
        if masks is not None and masks[n] is not None:
            mask &= masks[n]
        coords = np.argwhere(mask)
        if max_coords is not None and len(coords) > max_coords:
            coords = coords[np.sort(rng.substream(n).permutation(len(coords))[:max_coords])]
        for coord in coords:
            idx = tuple(coord)
            a = np.float64(analytic[idx])
            err = float(relative_error(a, central(t, idx, eps), floor))
            if kink_retry and err > 1e-6:
                err = min(err, float(relative_error(a, central(t, idx, eps / 10), floor)))
            worst = max(worst, err)
    return worst
