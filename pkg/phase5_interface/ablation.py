"""Ablation grid: eight architecture variants, each trained over the protocol's seeds.

Variant names and the rows of the published ablation table:

    full            EEGViT-TCNet
    no_pointwise    No Pointwise Conv Layer
    no_temporal     No Temporal Conv Layer
    no_spatial      No Spatial Conv Layer
    dropout_0       0% Dropout
    dropout_25      25% Dropout
    dropout_50      50% Dropout
    cold_start      No Pretrained ViT (encoder starts from random initialisation)

Cache layout: one cell per (variant config, seed, dataset digest, train
config), keyed by the sha256 of their canonical JSON. A cell is the pair
``<key>.ntar`` (best-epoch weights) and ``<key>.json`` (its single-seed
RunReport). The JSON is written last, atomically, and marks the cell as
complete; an interrupted run leaves no JSON and the cell is recomputed.
"""

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from rich.console import Console
from rich.table import Table

from config.errors import ConfigError
from config.model_profile import PUBLISHED_ABLATION_RMSE
from config.settings import deterministic_mode
from phase2_dataset_store.binary import atomic_write
from phase2_dataset_store.records import Dataset
from phase3_model.checkpoint import Checkpoint, encode_checkpoint, export_weights
from phase3_model.config import ModelConfig
from phase4_training.report import RunReport, SeedResult
from phase4_training.trainer import TrainConfig, train

console = Console()


class Variant(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    delta: dict[str, Any] = {}


VARIANTS: dict[str, Variant] = {
    v.name: v
    for v in (
        Variant(name="full"),
        Variant(name="no_pointwise", delta={"remove_pointwise_conv": True}),
        Variant(name="no_temporal", delta={"remove_temporal_conv": True}),
        Variant(name="no_spatial", delta={"remove_spatial_conv": True}),
        Variant(name="dropout_0", delta={"tcn_dropout_override": 0.0}),
        Variant(name="dropout_25", delta={"tcn_dropout_override": 0.25}),
        Variant(name="dropout_50", delta={"tcn_dropout_override": 0.5}),
        Variant(name="cold_start", delta={"warm_start": None}),
    )
}


def resolve_variant(v: Union[str, Variant]) -> Variant:
    if isinstance(v, Variant):
        return v
    try:
        return VARIANTS[v]
    except KeyError:
        raise ConfigError(f"unknown variant {v!r}; choose from {list(VARIANTS)}")


def apply_variant(base: ModelConfig, v: Union[str, Variant]) -> ModelConfig:
    """`base` with the variant's ablation-flag changes; `full` returns `base` itself."""
    variant = resolve_variant(v)
    if not variant.delta:
        return base
    return base.replace(ablation=dict(variant.delta))


def _warm_start_digest(config: ModelConfig) -> Optional[str]:
    path = config.ablation.warm_start
    if path is None or not Path(path).exists():
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cell_key(config: ModelConfig, seed: int, dataset_digest: str, train_config: TrainConfig) -> str:
    """sha256 over the cell inputs; a warm-start checkpoint counts by content, not path."""
    payload = {
        "warm_start": _warm_start_digest(config),
        "model": config.model_dump(mode="json"),
        "seed": seed,
        "data": dataset_digest,
        "train": train_config.model_dump(mode="json", exclude={"seeds"}),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


CellRunner = Callable[[ModelConfig, Dataset, TrainConfig, str], tuple[RunReport, Optional[Checkpoint]]]


def train_cell(config: ModelConfig, dataset: Dataset, train_config: TrainConfig,
               label: str) -> tuple[RunReport, Optional[Checkpoint]]:
    """Train one single-seed cell from scratch."""
    models: dict = {}
    report = train(config, dataset, train_config, verbose=False, label=label, keep_models=models)
    seed = train_config.seeds[0]
    return report, (export_weights(models[seed]) if seed in models else None)


def _store_cell(cache_dir: Path, key: str, report: RunReport, ckpt: Optional[Checkpoint]) -> None:
    if ckpt is not None:
        atomic_write(cache_dir / f"{key}.ntar", encode_checkpoint(ckpt))
    atomic_write(cache_dir / f"{key}.json", report.model_dump_json().encode("utf-8"))


def _load_cell(cache_dir: Path, key: str) -> Optional[RunReport]:
    path = cache_dir / f"{key}.json"
    if not path.exists():
        return None
    return RunReport.model_validate_json(path.read_text(encoding="utf-8"))


def _failed_cell(seed: int, label: str, exc: BaseException) -> RunReport:
    return RunReport.from_results([SeedResult(seed=seed, error=f"{type(exc).__name__}: {exc}")],
                                  label=label)


class AblationTable:
    """Per-cell RunReports plus their variant x (mean, std) summary."""

    def __init__(self, cells: dict[tuple[str, int], RunReport], variant_order: Sequence[str],
                 cache_hits: int = 0):
        self.cells = cells
        self.variant_order = list(variant_order)
        self.cache_hits = cache_hits
        self.frame = self._build_frame()

    def _build_frame(self) -> pd.DataFrame:
        records = []
        for (name, seed), report in self.cells.items():
            result = report.seeds[0]
            records.append({"variant": name, "seed": seed,
                            "rmse": result.best_val_rmse if result.ok else np.nan})
        cells = pd.DataFrame(records, columns=["variant", "seed", "rmse"])
        grouped = cells.groupby("variant", sort=False)["rmse"]
        summary = pd.DataFrame({
            "mean": grouped.mean(),
            "std": grouped.std(ddof=1).fillna(0.0),
            "runs": grouped.count(),
            "seeds": grouped.size(),
        }).reindex(self.variant_order)
        summary["published"] = [PUBLISHED_ABLATION_RMSE.get(n, (n, None, None))[0]
                                for n in summary.index]
        summary["published_mean"] = [PUBLISHED_ABLATION_RMSE.get(n, (n, None, None))[1]
                                     for n in summary.index]
        summary["published_std"] = [PUBLISHED_ABLATION_RMSE.get(n, (n, None, None))[2]
                                    for n in summary.index]
        summary.index.name = "variant"
        return summary

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def failures(self) -> dict[tuple[str, int], str]:
        return {cell: r.seeds[0].error or "failed" for cell, r in self.cells.items()
                if not r.seeds[0].ok}

    def to_structured(self) -> dict[str, Any]:
        rows = {}
        for name, row in self.frame.iterrows():
            per_seed = {str(seed): report.seeds[0].best_val_rmse
                        for (variant, seed), report in self.cells.items() if variant == name}
            rows[name] = {
                "label": row["published"],
                "per_seed_rmse": per_seed,
                "mean": None if pd.isna(row["mean"]) else float(row["mean"]),
                "std": None if pd.isna(row["mean"]) else float(row["std"]),
                "published": {"mean": None if pd.isna(row["published_mean"]) else float(row["published_mean"]),
                              "std": None if pd.isna(row["published_std"]) else float(row["published_std"])},
            }
        return {
            "variants": rows,
            "failures": {f"{v}/{s}": msg for (v, s), msg in self.failures.items()},
        }

    def to_text(self) -> str:
        return json.dumps(self.to_structured(), indent=2, sort_keys=True)

    def write(self, path: Path) -> None:
        atomic_write(Path(path), (self.to_text() + "\n").encode("utf-8"))

    def print_table(self) -> None:
        table = Table(title="Ablation: validation RMSE (mm), mean ± std over seeds")
        table.add_column("Variant", style="cyan")
        table.add_column("Row", style="dim")
        table.add_column("Measured", justify="right", style="green")
        table.add_column("Runs", justify="right")
        table.add_column("Published (full scale)", justify="right", style="dim")
        for name, row in self.frame.iterrows():
            measured = "[red]failed[/red]" if pd.isna(row["mean"]) else f"{row['mean']:.2f} ± {row['std']:.2f}"
            published = "-" if pd.isna(row["published_mean"]) else \
                f"{row['published_mean']:.1f} ± {row['published_std']:.1f}"
            table.add_row(name, str(row["published"]), measured,
                          f"{int(row['runs'])}/{int(row['seeds'])}", published)
        console.print(table)


def run_grid(base_config: ModelConfig, dataset: Dataset, train_config: TrainConfig,
             variants: Sequence[Union[str, Variant]] = tuple(VARIANTS),
             cache_dir: Optional[Path] = None, jobs: int = 1,
             cell_runner: CellRunner = train_cell, verbose: bool = False) -> AblationTable:
    """Train every (variant, seed) cell and summarise per variant.

    Cached cells are reused. Uncached cells run in `jobs` worker processes
    unless deterministic mode is on. A failing cell is recorded as a failed
    seed; the remaining cells still run.
    """
    resolved = [resolve_variant(v) for v in variants]
    if not resolved:
        raise ConfigError("run_grid needs at least one variant")
    names = [v.name for v in resolved]
    if len(set(names)) != len(names):
        raise ConfigError(f"variant names must be unique, got {names}")
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")

    configs = {v.name: apply_variant(base_config, v) for v in resolved}
    digest = dataset.digest()
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)

    cells: dict[tuple[str, int], RunReport] = {}
    pending: list[tuple[tuple[str, int], str]] = []
    hits = 0
    for name in names:
        for seed in train_config.seeds:
            key = cell_key(configs[name], seed, digest, train_config)
            cached = _load_cell(cache_dir, key) if cache_dir is not None else None
            if cached is not None:
                cells[(name, seed)] = cached
                hits += 1
            else:
                cells[(name, seed)] = None
                pending.append(((name, seed), key))
    if verbose:
        console.print(f"[bold blue]Ablation grid[/bold blue]: {len(names)} variants x "
                      f"{len(train_config.seeds)} seeds, {hits} cached, {len(pending)} to train")

    def finish(cell: tuple[str, int], key: str, outcome: Any) -> None:
        name, seed = cell
        if isinstance(outcome, BaseException):
            console.print(f"  [red]{name} seed {seed} failed: {outcome}[/red]")
            cells[cell] = _failed_cell(seed, name, outcome)
            return
        report, ckpt = outcome
        cells[cell] = report
        if cache_dir is not None and report.seeds[0].ok:
            _store_cell(cache_dir, key, report, ckpt)
        if verbose:
            rmse = report.seeds[0].best_val_rmse
            status = f"{rmse:.2f} mm" if rmse is not None else "[red]failed[/red]"
            console.print(f"  [dim]{name} seed {seed}:[/dim] {status}")

    def cell_args(cell: tuple[str, int]) -> tuple:
        name, seed = cell
        return configs[name], dataset, train_config.model_copy(update={"seeds": (seed,)}), name

    if jobs > 1 and not deterministic_mode() and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [(cell, key, pool.submit(cell_runner, *cell_args(cell)))
                       for cell, key in pending]
            for cell, key, future in futures:
                try:
                    outcome = future.result()
                except Exception as exc:
                    outcome = exc
                finish(cell, key, outcome)
    else:
        for cell, key in pending:
            try:
                outcome = cell_runner(*cell_args(cell))
            except Exception as exc:
                outcome = exc
            finish(cell, key, outcome)

    table = AblationTable(cells, names, cache_hits=hits)
    if verbose:
        table.print_table()
    return table
