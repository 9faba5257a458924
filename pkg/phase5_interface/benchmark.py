"""Latency and FLOP harness for the patch-projection accuracy/efficiency tradeoff.

Latency is wall-clock time of one eval-mode forward pass under `no_grad`,
measured with `time.perf_counter` after a warmup and summarised by median,
p10 and p90. Benchmarks are meant to run one at a time in a single process;
running several concurrently makes the numbers meaningless.
"""

import time
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator
from rich.console import Console
from rich.table import Table

from autodiff.rng import RngStream
from autodiff.tensor import Tensor, no_grad
from config.errors import ConfigError
from config.model_profile import PUBLISHED_SPEEDUP
from phase2_dataset_store.records import Dataset
from phase2_dataset_store.splitting import split_by_subject
from phase3_model.checkpoint import import_weights, load_checkpoint
from phase3_model.config import ModelConfig
from phase3_model.flops import encoder_attention_flops, estimate_flops
from phase3_model.network import Model, build_model
from phase4_training.losses import rmse_mm
from phase4_training.trainer import Standardizer, predict_mm

console = Console()

MIN_REPETITIONS = 10
MIN_WARMUP = 3


class BenchResult(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    label: str
    kernel: int
    stride: int
    tokens: int
    flops: int
    attention_flops: int
    latency_median: float
    latency_p10: float
    latency_p90: float
    batch_size: int
    warmup: int
    repetitions: int
    timings: list[float]
    val_rmse: Optional[float] = None

    @model_validator(mode="after")
    def _ordered(self) -> "BenchResult":
        if not self.latency_p10 <= self.latency_median <= self.latency_p90:
            raise ConfigError("latency percentiles out of order")
        return self

    @property
    def per_sample_median(self) -> float:
        return self.latency_median / self.batch_size


def _check_counts(repetitions: int, warmup: int) -> None:
    if repetitions < MIN_REPETITIONS:
        raise ConfigError(f"repetitions must be >= {MIN_REPETITIONS}, got {repetitions}")
    if warmup < MIN_WARMUP:
        raise ConfigError(f"warmup must be >= {MIN_WARMUP}, got {warmup}")


def measure_latency(model: Model, input_shape: Sequence[int], repetitions: int = 30,
                    warmup: int = MIN_WARMUP, label: str = "",
                    inputs: Optional[np.ndarray] = None) -> BenchResult:
    """Time `repetitions` forward passes on one preallocated input batch.

    Only post-warmup passes enter the statistics; `timings` holds them in
    order. `inputs` replaces the default random batch when given.
    """
    _check_counts(repetitions, warmup)
    config = model.config
    batch = int(input_shape[0])
    dtype = model.head.fc2.weight.dtype
    if inputs is None:
        inputs = RngStream(0).substream("bench-input").normal(1.0, tuple(input_shape), dtype)
    x = Tensor(np.ascontiguousarray(inputs, dtype=dtype))

    model.eval()
    timings = []
    with no_grad():
        for _ in range(warmup):
            model(x)
        for _ in range(repetitions):
            start = time.perf_counter()
            model(x)
            timings.append(time.perf_counter() - start)

    p10, median, p90 = np.percentile(np.asarray(timings), [10, 50, 90])
    return BenchResult(
        label=label or f"k{config.patch_projection_kernel}_s{config.patch_projection_stride}",
        kernel=config.patch_projection_kernel,
        stride=config.patch_projection_stride,
        tokens=config.token_count(),
        flops=estimate_flops(config, batch),
        attention_flops=encoder_attention_flops(config, batch),
        latency_median=float(median),
        latency_p10=float(p10),
        latency_p90=float(p90),
        batch_size=batch,
        warmup=warmup,
        repetitions=repetitions,
        timings=timings,
    )


def geometry_config(base: ModelConfig, kernel: int, stride: int) -> ModelConfig:
    """`base` with the patch projection replaced; zero tokens is a ConfigError."""
    return base.replace(patch_projection_kernel=kernel, patch_projection_stride=stride)


def checkpoint_name(kernel: int, stride: int) -> str:
    return f"patch_k{kernel}_s{stride}.ntar"


def _sample_inputs(sample: Dataset, batch: int, dtype) -> np.ndarray:
    scaler = Standardizer.fit(sample)
    x = scaler.signals(sample, dtype)
    reps = -(-batch // len(x))
    return np.concatenate([x] * reps)[:batch]


def _checkpoint_rmse(config: ModelConfig, path: Path, dataset: Dataset,
                     train_fraction: float, split_seed: int, batch: int) -> float:
    model = build_model(config.replace(ablation={"warm_start": None}), RngStream(0))
    import_weights(model, load_checkpoint(path), strict=True)
    train_ds, val_ds = split_by_subject(dataset, train_fraction, split_seed)
    scaler = Standardizer.fit(train_ds)
    dtype = model.head.fc2.weight.dtype
    pred = predict_mm(model, scaler.signals(val_ds, dtype), scaler, batch)
    return rmse_mm(pred, val_ds.labels)


class SweepTable:
    """Sweep results ranked by token count, with speedups against the slowest geometry."""

    def __init__(self, batch_results: list[BenchResult], single_results: list[BenchResult]):
        self.batch_results = batch_results
        self.single_results = single_results
        self.frame = self._build_frame()

    def _build_frame(self) -> pd.DataFrame:
        rows = []
        for full, single in zip(self.batch_results, self.single_results):
            rows.append({
                "label": full.label,
                "kernel": full.kernel,
                "stride": full.stride,
                "tokens": full.tokens,
                "gflops": full.flops / 1e9,
                "attention_flops": full.attention_flops,
                "median_s": full.latency_median,
                "p10_s": full.latency_p10,
                "p90_s": full.latency_p90,
                "single_median_s": single.latency_median,
                "val_rmse": full.val_rmse,
            })
        frame = pd.DataFrame(rows).sort_values("tokens", ascending=False, kind="stable")
        frame["speedup_batch"] = frame["median_s"].max() / frame["median_s"]
        frame["speedup_sample"] = frame["single_median_s"].max() / frame["single_median_s"]
        return frame.reset_index(drop=True)

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def max_speedup(self) -> float:
        return float(self.frame["speedup_batch"].max())

    def to_structured(self) -> dict[str, Any]:
        records = self.frame.replace({np.nan: None}).to_dict(orient="records")
        return {
            "geometries": records,
            "batch_size": self.batch_results[0].batch_size if self.batch_results else None,
            "published_speedup": PUBLISHED_SPEEDUP,
        }

    def print_table(self) -> None:
        table = Table(title="Patch-projection sweep (ranked by token count)")
        table.add_column("Geometry", style="cyan")
        table.add_column("Tokens", justify="right")
        table.add_column("GFLOPs", justify="right")
        table.add_column("Median ms", justify="right", style="green")
        table.add_column("p10-p90 ms", justify="right", style="dim")
        table.add_column("Speedup (batch)", justify="right", style="bold")
        table.add_column("Speedup (1 sample)", justify="right")
        table.add_column("Val RMSE", justify="right")
        for row in self.frame.itertuples():
            rmse = "-" if row.val_rmse is None or pd.isna(row.val_rmse) else f"{row.val_rmse:.2f}"
            table.add_row(
                row.label, str(row.tokens), f"{row.gflops:.3f}",
                f"{row.median_s * 1e3:.2f}",
                f"{row.p10_s * 1e3:.2f}-{row.p90_s * 1e3:.2f}",
                f"{row.speedup_batch:.2f}x", f"{row.speedup_sample:.2f}x", rmse,
            )
        console.print(table)
        console.print(f"[dim]published full-scale speedup: {PUBLISHED_SPEEDUP}x (reference)[/dim]")


def patch_sweep(base_config: ModelConfig, geometries: Sequence[tuple[int, int]],
                dataset_sample: Optional[Dataset] = None, batch_size: int = 32,
                repetitions: int = 30, warmup: int = MIN_WARMUP,
                checkpoint_dir: Optional[Path] = None, train_fraction: float = 0.7,
                split_seed: int = 0, verbose: bool = False) -> SweepTable:
    """Benchmark every (kernel, stride) geometry at `batch_size` and at batch 1.

    All geometries are validated before any timing starts. With
    `checkpoint_dir`, a file named by `checkpoint_name` is loaded for each
    geometry that has one and its validation RMSE on `dataset_sample` is added.
    """
    if not geometries:
        raise ConfigError("patch_sweep needs at least one geometry")
    _check_counts(repetitions, warmup)
    configs = [geometry_config(base_config, k, s) for k, s in geometries]

    batch_results, single_results = [], []
    for config in configs:
        model = build_model(config.replace(ablation={"warm_start": None}), RngStream(0))
        dtype = model.head.fc2.weight.dtype
        shape = (batch_size, config.in_channels, config.timepoints)
        inputs = None
        if dataset_sample is not None:
            inputs = _sample_inputs(dataset_sample, batch_size, dtype)
        if verbose:
            console.print(f"  [dim]timing {config.token_count()} tokens "
                          f"(k={config.patch_projection_kernel}, s={config.patch_projection_stride})[/dim]")
        result = measure_latency(model, shape, repetitions, warmup, inputs=inputs)
        single = measure_latency(model, (1, *shape[1:]), repetitions, warmup,
                                 inputs=None if inputs is None else inputs[:1])

        if checkpoint_dir is not None and dataset_sample is not None:
            path = Path(checkpoint_dir) / checkpoint_name(config.patch_projection_kernel,
                                                          config.patch_projection_stride)
            if path.exists():
                rmse = _checkpoint_rmse(config, path, dataset_sample, train_fraction,
                                        split_seed, batch_size)
                result = result.model_copy(update={"val_rmse": rmse})
            elif verbose:
                console.print(f"  [yellow]no checkpoint {path.name}; RMSE column left empty[/yellow]")
        batch_results.append(result)
        single_results.append(single)

    table = SweepTable(batch_results, single_results)
    if verbose:
        table.print_table()
    return table
