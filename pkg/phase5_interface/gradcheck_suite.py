"""Finite-difference gradient suite over every differentiable op and the desk-scale model.

Each op has a case builder that draws random shapes and values from an
RngStream, so the suite and the property tests share one source of cases.
All checks run in float64 with central differences (eps 1e-5).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from rich.console import Console
from rich.table import Table

from autodiff import functional as F
from autodiff.gradcheck import grad_check
from autodiff.rng import RngStream
from autodiff.tensor import Tensor, precision
from phase3_model.config import preset
from phase3_model.network import build_model
from phase4_training.losses import mse_loss

console = Console()

OP_TOLERANCE = 1e-4
MODEL_TOLERANCE = 1e-3


@dataclass
class GradCase:
    fn: Callable[..., Tensor]
    inputs: list[Tensor]
    kinks: tuple[float, ...] = ()


def _leaf(rng: RngStream, *shape: int, low: Optional[float] = None) -> Tensor:
    data = rng.normal(1.0, shape) if low is None else rng.uniform(low, low + 1.0, shape)
    return Tensor(data, requires_grad=True, dtype=np.float64)


def _int(rng: RngStream, low: int, high: int) -> int:
    """Uniform integer in [low, high]."""
    return int(rng.integers(low, high + 1))


def arithmetic_case(rng: RngStream) -> GradCase:
    shape = (_int(rng, 1, 4), _int(rng, 1, 5))
    a, b = _leaf(rng, *shape), _leaf(rng, shape[1])
    c = _leaf(rng, *shape, low=1.5)
    return GradCase(lambda a, b, c: a * b + a / c - b ** 2.0 - (-c), [a, b, c])


def shape_ops_case(rng: RngStream) -> GradCase:
    b, n, m = _int(rng, 1, 3), _int(rng, 2, 4), _int(rng, 2, 4)
    x, y = _leaf(rng, b, n, m), _leaf(rng, b, n, 1)

    def fn(x, y):
        joined = F.concat([x, F.broadcast_to(y, (b, n, m))], axis=2)
        flipped = joined.transpose(0, 2, 1).reshape(b, -1)
        return flipped[:, 1:].sum(axis=1) + flipped.mean()

    return GradCase(fn, [x, y])


def matmul_case(rng: RngStream) -> GradCase:
    b, m, k, n = (_int(rng, 1, 3), _int(rng, 1, 4), _int(rng, 1, 5), _int(rng, 1, 4))
    return GradCase(F.matmul, [_leaf(rng, b, m, k), _leaf(rng, k, n)])


def linear_case(rng: RngStream) -> GradCase:
    rows, n, m = _int(rng, 1, 4), _int(rng, 1, 6), _int(rng, 1, 5)
    return GradCase(F.linear, [_leaf(rng, 2, rows, n), _leaf(rng, m, n), _leaf(rng, m)])


def conv2d_case(rng: RngStream) -> GradCase:
    b, cin, cout = _int(rng, 1, 2), _int(rng, 1, 3), _int(rng, 1, 3)
    kh, kw = _int(rng, 1, 3), _int(rng, 1, 3)
    sh, sw = _int(rng, 1, 2), _int(rng, 1, 2)
    dh, dw = _int(rng, 1, 2), _int(rng, 1, 2)
    ph, pw = _int(rng, 0, 1), _int(rng, 0, 1)
    h = (kh - 1) * dh + 1 + _int(rng, 0, 3)
    w = (kw - 1) * dw + 1 + _int(rng, 0, 3)
    x, weight, bias = _leaf(rng, b, cin, h, w), _leaf(rng, cout, cin, kh, kw), _leaf(rng, cout)
    return GradCase(
        lambda x, weight, bias: F.conv2d(x, weight, bias, stride=(sh, sw), padding=(ph, pw),
                                         dilation=(dh, dw)),
        [x, weight, bias],
    )


def conv1d_causal_case(rng: RngStream) -> GradCase:
    cin, cout, k, d = _int(rng, 1, 3), _int(rng, 1, 3), _int(rng, 2, 3), _int(rng, 1, 4)
    length = _int(rng, 3, 9)
    x, weight, bias = _leaf(rng, 2, cin, length), _leaf(rng, cout, cin, k), _leaf(rng, cout)
    return GradCase(lambda x, weight, bias: F.conv1d(x, weight, bias, dilation=d, causal=True),
                    [x, weight, bias])


def avg_pool_case(rng: RngStream) -> GradCase:
    k, s = _int(rng, 1, 3), _int(rng, 1, 2)
    x = _leaf(rng, 2, _int(rng, 1, 3), _int(rng, 1, 3), k + _int(rng, 0, 5))
    return GradCase(lambda x: F.avg_pool2d(x, (1, k), (1, s)), [x])


def batch_norm_case(rng: RngStream) -> GradCase:
    b, c, h, w = _int(rng, 2, 3), _int(rng, 1, 3), _int(rng, 2, 3), _int(rng, 2, 3)
    x, gamma, beta = _leaf(rng, b, c, h, w), _leaf(rng, c), _leaf(rng, c)
    state = F.BatchNormState.fresh(c, 0.1, np.float64)
    return GradCase(lambda x, gamma, beta: F.batch_norm(x, gamma, beta, state, training=True),
                    [x, gamma, beta])


def layer_norm_case(rng: RngStream) -> GradCase:
    d = _int(rng, 3, 8)
    x, gamma, beta = _leaf(rng, 2, _int(rng, 1, 3), d), _leaf(rng, d), _leaf(rng, d)
    return GradCase(F.layer_norm, [x, gamma, beta])


def weight_norm_case(rng: RngStream) -> GradCase:
    cout, cin, k = _int(rng, 1, 4), _int(rng, 1, 3), _int(rng, 1, 3)
    return GradCase(F.weight_norm, [_leaf(rng, cout, cin, k), _leaf(rng, cout)])


def relu_case(rng: RngStream) -> GradCase:
    return GradCase(F.relu, [_leaf(rng, _int(rng, 1, 4), _int(rng, 1, 6))], kinks=(0.0,))


def gelu_case(rng: RngStream) -> GradCase:
    return GradCase(F.gelu, [_leaf(rng, _int(rng, 1, 4), _int(rng, 1, 6))])


def softmax_case(rng: RngStream) -> GradCase:
    return GradCase(F.softmax, [_leaf(rng, _int(rng, 1, 4), _int(rng, 2, 6))])


def dropout_case(rng: RngStream) -> GradCase:
    rate = float(rng.uniform(0.1, 0.7, ()))
    mask_seed = _int(rng, 0, 1000)
    x = _leaf(rng, _int(rng, 1, 4), _int(rng, 2, 6))
    return GradCase(lambda x: F.dropout(x, rate, True, RngStream(mask_seed)), [x])


def attention_case(rng: RngStream) -> GradCase:
    shape = (_int(rng, 1, 2), _int(rng, 1, 3), _int(rng, 2, 5), _int(rng, 1, 4))
    return GradCase(F.attention, [_leaf(rng, *shape), _leaf(rng, *shape), _leaf(rng, *shape)])


def mse_case(rng: RngStream) -> GradCase:
    b = _int(rng, 1, 5)
    return GradCase(mse_loss, [_leaf(rng, b, 2), _leaf(rng, b, 2)])


OP_CASES: dict[str, Callable[[RngStream], GradCase]] = {
    "arithmetic": arithmetic_case,
    "shape_ops": shape_ops_case,
    "matmul": matmul_case,
    "linear": linear_case,
    "conv2d": conv2d_case,
    "conv1d_causal": conv1d_causal_case,
    "avg_pool": avg_pool_case,
    "batch_norm": batch_norm_case,
    "layer_norm": layer_norm_case,
    "weight_norm": weight_norm_case,
    "relu": relu_case,
    "gelu": gelu_case,
    "softmax": softmax_case,
    "dropout": dropout_case,
    "attention": attention_case,
    "mse_loss": mse_case,
}


def check_case(name: str, seed: int) -> float:
    """Max relative error of one randomly drawn case of op `name`."""
    with precision(np.float64):
        case = OP_CASES[name](RngStream(seed).substream(name))
        return grad_check(case.fn, case.inputs, kinks=case.kinks, seed=seed)


def check_model(scale: str = "desk", batch: int = 2, coords_per_tensor: int = 2,
                seed: int = 0) -> float:
    """End-to-end check of every parameter tensor of a freshly built model.

    Dropout is disabled so repeated forwards agree; batch norm runs in train
    mode. A few coordinates are sampled per parameter tensor.
    """
    with precision(np.float64):
        config = preset(scale, tcn_dropout=0.0, head_dropout=0.0)
        rng = RngStream(seed)
        model = build_model(config, rng.substream("model")).train()
        x = Tensor(rng.substream("input").normal(1.0, (batch, config.in_channels, config.timepoints)))
        y = Tensor(rng.substream("target").normal(1.0, (batch, 2)))
        params = model.parameters()
        return grad_check(lambda *_: mse_loss(model(x), y), params,
                          max_coords=coords_per_tensor, seed=seed, floor=1e-6, kink_retry=True)


def run_gradcheck_suite(scale: str = "desk", cases: int = 5, include_model: bool = True,
                        verbose: bool = True) -> tuple[dict[str, float], bool]:
    """Worst relative error per op over `cases` random cases, plus the model.

    Returns (errors, passed): ops must stay below 1e-4, the model below 1e-3.
    """
    errors = {name: max(check_case(name, seed) for seed in range(cases)) for name in OP_CASES}
    limits = {name: OP_TOLERANCE for name in OP_CASES}
    if include_model:
        errors[f"model ({scale})"] = check_model(scale)
        limits[f"model ({scale})"] = MODEL_TOLERANCE
    passed = all(errors[name] < limits[name] for name in errors)

    if verbose:
        table = Table(title="Gradient check (float64, eps 1e-5)")
        table.add_column("Op", style="cyan")
        table.add_column("Max rel. error", justify="right")
        table.add_column("Limit", justify="right", style="dim")
        table.add_column("Status")
        for name, err in errors.items():
            ok = err < limits[name]
            table.add_row(name, f"{err:.2e}", f"{limits[name]:.0e}",
                          "[green]PASS[/green]" if ok else "[red]FAIL[/red]")
        console.print(table)
    return errors, passed
