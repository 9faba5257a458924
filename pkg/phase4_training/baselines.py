"""Classical reference decoders: mean predictor, ridge regression, k-nearest neighbours."""

import numpy as np
from rich.console import Console
from rich.table import Table
from scipy.spatial import cKDTree

from config.model_profile import PUBLISHED_BASELINE_RMSE
from phase2_dataset_store.records import Dataset
from phase4_training.losses import rmse_mm

console = Console()


def naive_mean_baseline(train: Dataset, val: Dataset) -> float:
    """Predict the training-set mean position for every sample."""
    mean = train.labels.astype(np.float64).mean(axis=0)
    return rmse_mm(np.broadcast_to(mean, val.labels.shape), val.labels)


def _flat(ds: Dataset) -> np.ndarray:
    return ds.signals.reshape(len(ds), -1).astype(np.float64)


def ridge_fit_predict(x_train: np.ndarray, y_train: np.ndarray, x_eval: np.ndarray,
                      alpha: float = 1e-3) -> np.ndarray:
    """Ridge regression with an unpenalised intercept, solved in the sample (dual) space.

    `alpha` is relative to the mean eigenvalue of the centred Gram matrix, so
    it is insensitive to signal scale.
    """
    x_mean, y_mean = x_train.mean(axis=0), y_train.mean(axis=0)
    xc, yc = x_train - x_mean, y_train - y_mean
    gram = xc @ xc.T
    ridge = alpha * max(np.trace(gram) / len(gram), np.finfo(np.float64).tiny)
    dual = np.linalg.lstsq(gram + ridge * np.eye(len(gram)), yc, rcond=None)[0]
    weights = xc.T @ dual
    return (x_eval - x_mean) @ weights + y_mean


def ridge_baseline(train: Dataset, val: Dataset, alpha: float = 1e-3) -> float:
    pred = ridge_fit_predict(_flat(train), train.labels.astype(np.float64), _flat(val), alpha)
    return rmse_mm(pred, val.labels)


def band_power_features(ds: Dataset) -> np.ndarray:
    """Per-channel RMS amplitude, [N, channels]."""
    return np.sqrt(np.mean(ds.signals.astype(np.float64) ** 2, axis=2))


def knn_baseline(train: Dataset, val: Dataset, k: int = 5) -> float:
    f_train, f_val = band_power_features(train), band_power_features(val)
    mu, sd = f_train.mean(axis=0), f_train.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    tree = cKDTree((f_train - mu) / sd)
    k = min(k, len(train))
    _, idx = tree.query((f_val - mu) / sd, k=k)
    idx = np.asarray(idx).reshape(len(val), k)
    pred = train.labels.astype(np.float64)[idx].mean(axis=1)
    return rmse_mm(pred, val.labels)


def run_baselines(train: Dataset, val: Dataset, verbose: bool = True) -> dict[str, float]:
    results = {
        "Naive Guessing": naive_mean_baseline(train, val),
        "Linear Regression": ridge_baseline(train, val),
        "KNN": knn_baseline(train, val),
    }
    if verbose:
        table = Table(title="Baselines: validation RMSE (mm)")
        table.add_column("Model", style="cyan")
        table.add_column("Measured", justify="right", style="green")
        table.add_column("Published (full scale)", justify="right", style="dim")
        for name, value in results.items():
            ref_mean, ref_std = PUBLISHED_BASELINE_RMSE[name]
            table.add_row(name, f"{value:.2f}", f"{ref_mean:.1f} ± {ref_std:.1f}")
        console.print(table)
    return results
