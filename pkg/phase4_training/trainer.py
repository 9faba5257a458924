"""Supervised training protocol.

For every seed: fresh model, subject-wise 70/30 split, Adam on the MSE loss,
validation RMSE in millimetres after each epoch, early stopping with
patience 10 on that RMSE, and restoration of the best epoch's weights.

Inputs are standardised per channel and targets per axis with statistics of
the training split; predictions are mapped back to millimetres before the
metric is taken.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from rich.console import Console

from autodiff.rng import RngStream
from autodiff.tensor import Tensor, no_grad
from config.errors import ConfigError, NumericFailure
from phase2_dataset_store.records import Dataset
from phase2_dataset_store.splitting import assert_subject_disjoint, split_by_subject
from phase3_model.config import ModelConfig
from phase3_model.network import Model, build_model
from phase4_training.early_stopping import EarlyStopping
from phase4_training.losses import mse_loss, rmse_mm
from phase4_training.optimizer import Adam, AdamHyper
from phase4_training.report import RunReport, SeedResult

console = Console()


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    learning_rate: float = 1e-4
    batch_size: int = 64
    max_epochs: int = 100
    patience: int = 10
    train_fraction: float = 0.7
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    split_seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    @model_validator(mode="after")
    def _check(self) -> "TrainConfig":
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be nonempty and distinct, got {self.seeds}")
        if min(self.seeds) < 0:
            raise ConfigError("seeds must be non-negative")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2 (batch norm needs two samples)")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        return self

    @property
    def adam(self) -> AdamHyper:
        return AdamHyper(self.learning_rate, self.adam_beta1, self.adam_beta2, self.adam_eps)


@dataclass(frozen=True)
class Standardizer:
    signal_mean: np.ndarray  # [C, 1]
    signal_std: np.ndarray
    label_mean: np.ndarray   # [2]
    label_std: np.ndarray

    @classmethod
    def fit(cls, ds: Dataset) -> "Standardizer":
        x = ds.signals.astype(np.float64)
        s_mean = x.mean(axis=(0, 2))[:, None]
        s_std = x.std(axis=(0, 2))[:, None]
        y = ds.labels.astype(np.float64)
        l_mean, l_std = y.mean(axis=0), y.std(axis=0)
        return cls(s_mean, np.where(s_std > 0, s_std, 1.0), l_mean, np.where(l_std > 0, l_std, 1.0))

    def signals(self, ds: Dataset, dtype) -> np.ndarray:
        return ((ds.signals - self.signal_mean) / self.signal_std).astype(dtype)

    def targets(self, ds: Dataset, dtype) -> np.ndarray:
        return ((ds.labels - self.label_mean) / self.label_std).astype(dtype)

    def to_mm(self, pred: np.ndarray) -> np.ndarray:
        return pred.astype(np.float64) * self.label_std + self.label_mean


def batches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    """Consecutive chunks of `order`; a trailing single sample joins the previous chunk."""
    chunks = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        chunks[-2] = np.concatenate([chunks[-2], chunks.pop()])
    return chunks


def predict_mm(model: Model, x: np.ndarray, scaler: Standardizer, batch_size: int) -> np.ndarray:
    """Eval-mode predictions in millimetres."""
    model.eval()
    out = []
    with no_grad():
        for start in range(0, len(x), batch_size):
            out.append(model(x[start:start + batch_size]).data)
    return scaler.to_mm(np.concatenate(out))


def train_seed(model_config: ModelConfig, train_ds: Dataset, val_ds: Dataset,
               train_config: TrainConfig, seed: int,
               verbose: bool = False) -> tuple[SeedResult, Model]:
    """Train one model from scratch; returns its result and the best-epoch model."""
    started = time.perf_counter()
    rng = RngStream(seed)
    model = build_model(model_config, rng.substream("model"))
    dtype = model.head.fc2.weight.dtype
    optimizer = Adam(model.parameters(), train_config.adam)
    scaler = Standardizer.fit(train_ds)
    x_train, y_train = scaler.signals(train_ds, dtype), scaler.targets(train_ds, dtype)
    x_val = scaler.signals(val_ds, dtype)
    if len(x_train) < 2:
        raise ConfigError("the training split needs at least 2 samples")

    stopper = EarlyStopping(train_config.patience)
    best_state = model.state_dict()
    epoch = 0
    for epoch in range(1, train_config.max_epochs + 1):
        model.train()
        order = rng.substream(f"epoch{epoch}").permutation(len(x_train))
        for idx in batches(order, train_config.batch_size):
            optimizer.zero_grad()
            loss = mse_loss(model(x_train[idx]), Tensor(y_train[idx]))
            if not np.isfinite(loss.item()):
                raise NumericFailure(f"seed {seed}: non-finite loss in epoch {epoch}")
            loss.backward()
            optimizer.step()

        val_rmse = rmse_mm(predict_mm(model, x_val, scaler, train_config.batch_size), val_ds.labels)
        if not np.isfinite(val_rmse):
            raise NumericFailure(f"seed {seed}: non-finite validation RMSE in epoch {epoch}")
        if stopper.update(val_rmse):
            best_state = model.state_dict()
        if verbose:
            marker = "*" if stopper.best_epoch == epoch else " "
            console.print(f"  [dim]seed {seed} epoch {epoch:3d}[/dim] val RMSE {val_rmse:8.2f} mm {marker}")
        if stopper.should_stop:
            break

    model.load_state_dict(best_state)
    model.eval()
    result = SeedResult(
        seed=seed,
        best_val_rmse=stopper.best_value,
        best_epoch=stopper.best_epoch,
        stop_epoch=epoch,
        wall_seconds=time.perf_counter() - started,
        history=stopper.history,
    )
    return result, model


def train(model_config: ModelConfig, dataset: Dataset, train_config: TrainConfig,
          verbose: bool = False, label: str = "EEGViT-TCNet",
          keep_models: Optional[dict[int, Model]] = None) -> RunReport:
    """Run the protocol for every seed in `train_config.seeds`.

    A seed whose loss becomes non-finite is recorded as failed; the others
    still run. Trained models are stored into `keep_models` when given.
    """
    train_ds, val_ds = split_by_subject(dataset, train_config.train_fraction,
                                        train_config.split_seed)
    assert_subject_disjoint(train_ds, val_ds)
    if verbose:
        console.print(
            f"[bold blue]Training {label}[/bold blue]: {len(train_ds)} train / {len(val_ds)} val "
            f"samples ({len(train_ds.subjects)} / {len(val_ds.subjects)} subjects)"
        )

    results = []
    for seed in train_config.seeds:
        try:
            result, model = train_seed(model_config, train_ds, val_ds, train_config, seed, verbose)
        except NumericFailure as exc:
            console.print(f"  [red]seed {seed} aborted: {exc}[/red]")
            results.append(SeedResult(seed=seed, error=str(exc)))
            continue
        if keep_models is not None:
            keep_models[seed] = model
        results.append(result)

    report = RunReport.from_results(results, label=label)
    if verbose:
        report.print_summary()
    return report
