import numpy as np
import pytest

from config.model_profile import SCREEN_MM
from phase1_synthetic_data.generators.eeg_generator import SyntheticSpec, generate_synthetic
from phase2_dataset_store.records import Dataset
from phase2_dataset_store.splitting import split_by_subject
from phase4_training.baselines import (
    band_power_features,
    knn_baseline,
    naive_mean_baseline,
    ridge_baseline,
    ridge_fit_predict,
    run_baselines,
)
from phase4_training.losses import rmse_mm


def test_naive_baseline_is_distance_to_training_mean():
    train = Dataset(np.zeros((2, 1, 2)), np.array([[0.0, 0.0], [2.0, 0.0]]), np.array([0, 0]))
    val = Dataset(np.zeros((1, 1, 2)), np.array([[1.0, 3.0]]), np.array([1]))
    assert naive_mean_baseline(train, val) == pytest.approx(3.0)


def test_ridge_recovers_a_linear_map():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 6))
    w = rng.normal(size=(6, 2))
    y = x @ w + 5.0
    pred = ridge_fit_predict(x, y, x[:5], alpha=1e-8)
    np.testing.assert_allclose(pred, y[:5], atol=1e-4)


def test_band_power_is_per_channel_rms():
    signals = np.array([[[3.0, -3.0], [0.0, 4.0]]])
    ds = Dataset(signals, np.zeros((1, 2)), np.zeros(1))
    np.testing.assert_allclose(band_power_features(ds), [[3.0, np.sqrt(8.0)]])


def test_baselines_on_synthetic_data(synthetic_dataset):
    train, val = split_by_subject(synthetic_dataset, 0.7, 0)
    naive = naive_mean_baseline(train, val)
    assert ridge_baseline(train, val) < naive
    assert np.isfinite(knn_baseline(train, val))
    results = run_baselines(train, val, verbose=False)
    assert set(results) == {"Naive Guessing", "Linear Regression", "KNN"}
    assert results["Naive Guessing"] == pytest.approx(naive)


def test_ridge_decodes_one_noise_free_subject():
    ds = generate_synthetic(SyntheticSpec(n_subjects=1, trials_per_subject=50, seed=7))
    x = ds.signals.reshape(len(ds), -1).astype(np.float64)
    y = ds.labels.astype(np.float64)
    pred = ridge_fit_predict(x[:40], y[:40], x[40:], alpha=1e-6)
    assert rmse_mm(pred, y[40:]) < 1.0


def test_ridge_beats_naive_fivefold_on_noise_free_data(synthetic_dataset):
    train, val = split_by_subject(synthetic_dataset, 0.7, 0)
    assert naive_mean_baseline(train, val) >= 5.0 * ridge_baseline(train, val)


def test_mean_predictor_matches_grid_spread(synthetic_dataset):
    train, val = split_by_subject(synthetic_dataset, 0.7, 0)
    width, height = SCREEN_MM["width_mm"], SCREEN_MM["height_mm"]
    # five evenly spaced targets over 80% of each axis: variance 0.125 * span^2
    analytic = np.sqrt(0.125 * ((0.8 * width) ** 2 + (0.8 * height) ** 2))
    assert naive_mean_baseline(train, val) == pytest.approx(analytic, rel=0.01)
