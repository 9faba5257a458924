"""Training protocol: determinism, early stopping, failure handling, learnability."""

import numpy as np
import pytest

from autodiff.rng import RngStream
from autodiff.tensor import Tensor
from config.errors import ConfigError, DimensionError, NumericFailure
from phase1_synthetic_data.generators.eeg_generator import SyntheticSpec, generate_synthetic
from phase2_dataset_store.splitting import split_by_subject
from phase3_model.config import preset
from phase3_model.network import build_model
from phase4_training import trainer
from phase4_training.baselines import naive_mean_baseline, ridge_baseline
from phase4_training.losses import mse_loss, rmse_mm
from phase4_training.report import RunReport, SeedResult
from phase4_training.trainer import Standardizer, TrainConfig, batches, predict_mm, train

QUICK = dict(batch_size=8, max_epochs=2, patience=10, seeds=(1,))


def test_rmse_is_root_mean_euclidean_distance():
    pred = np.array([[3.0, 4.0], [0.0, 0.0]])
    target = np.zeros((2, 2))
    assert rmse_mm(pred, target) == pytest.approx(np.sqrt((25.0 + 0.0) / 2))


def test_mse_loss_averages_all_elements():
    loss = mse_loss(Tensor(np.array([[1.0, 2.0]])), Tensor(np.array([[0.0, 0.0]])))
    assert loss.item() == pytest.approx(2.5)
    with pytest.raises(DimensionError):
        mse_loss(Tensor(np.zeros((2, 2))), Tensor(np.zeros((3, 2))))


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(patience=0)
    with pytest.raises(ConfigError):
        TrainConfig(seeds=(1, 1))
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=1)
    with pytest.raises(ConfigError):
        TrainConfig(train_fraction=1.0)


def test_protocol_defaults():
    config = TrainConfig()
    assert config.learning_rate == 1e-4
    assert config.patience == 10
    assert config.seeds == (1, 2, 3, 4, 5)
    assert config.train_fraction == 0.7


def test_trailing_single_sample_joins_previous_batch():
    chunks = batches(np.arange(17), 8)
    assert [len(c) for c in chunks] == [8, 9]
    assert [len(c) for c in batches(np.arange(18), 8)] == [8, 8, 2]
    assert [len(c) for c in batches(np.arange(1), 8)] == [1]


def test_standardizer_uses_training_statistics(tiny_dataset):
    train_ds, val_ds = split_by_subject(tiny_dataset, 0.7, 0)
    scaler = Standardizer.fit(train_ds)
    x = scaler.signals(train_ds, np.float64)
    np.testing.assert_allclose(x.mean(axis=(0, 2)), 0.0, atol=1e-6)
    y = scaler.targets(train_ds, np.float64)
    np.testing.assert_allclose(scaler.to_mm(y), train_ds.labels, rtol=1e-5)


def test_same_seed_same_report(tiny_dataset, desk_config):
    config = TrainConfig(**QUICK)
    a = train(desk_config, tiny_dataset, config)
    b = train(desk_config, tiny_dataset, config)
    assert a.deterministic_view() == b.deterministic_view()


def test_report_statistics(tiny_dataset, desk_config):
    report = train(desk_config, tiny_dataset, TrainConfig(**{**QUICK, "seeds": (1, 2)}))
    assert [r.seed for r in report.seeds] == [1, 2]
    assert report.recompute() == (report.mean, report.std)
    values = [r.best_val_rmse for r in report.seeds]
    assert report.std == pytest.approx(np.std(values, ddof=1))
    structured = report.to_structured()
    assert set(structured) == {"label", "per_seed_rmse", "mean", "std", "epochs",
                               "wall_seconds", "failures"}
    assert structured["failures"] == {}


def test_zero_learning_rate_keeps_validation_rmse_and_stops_on_patience(tiny_dataset):
    config = preset("desk", bn_momentum=0.0)
    train_config = TrainConfig(learning_rate=0.0, batch_size=8, max_epochs=20, patience=3,
                               seeds=(4,))
    models = {}
    report = train(config, tiny_dataset, train_config, keep_models=models)
    result = report.seeds[0]
    assert len(set(result.history)) == 1
    assert result.best_epoch == 1
    assert result.stop_epoch == 4

    fresh = build_model(config, RngStream(4).substream("model"))
    train_ds, val_ds = split_by_subject(tiny_dataset, 0.7, 0)
    scaler = Standardizer.fit(train_ds)
    pred = predict_mm(fresh, scaler.signals(val_ds, np.float32), scaler, 8)
    assert result.best_val_rmse == pytest.approx(rmse_mm(pred, val_ds.labels), rel=1e-6)


def test_best_epoch_weights_are_restored(tiny_dataset, desk_config):
    models = {}
    train_config = TrainConfig(learning_rate=1e-3, batch_size=8, max_epochs=4, seeds=(2,))
    report = train(desk_config, tiny_dataset, train_config, keep_models=models)
    train_ds, val_ds = split_by_subject(tiny_dataset, 0.7, 0)
    scaler = Standardizer.fit(train_ds)
    pred = predict_mm(models[2], scaler.signals(val_ds, np.float32), scaler, 8)
    assert rmse_mm(pred, val_ds.labels) == pytest.approx(report.seeds[0].best_val_rmse, rel=1e-5)


def test_numeric_failure_is_isolated_per_seed(tiny_dataset, desk_config, monkeypatch):
    real = trainer.train_seed

    def flaky(model_config, train_ds, val_ds, train_config, seed, verbose=False):
        if seed == 2:
            raise NumericFailure("non-finite loss")
        return real(model_config, train_ds, val_ds, train_config, seed, verbose)

    monkeypatch.setattr(trainer, "train_seed", flaky)
    report = train(desk_config, tiny_dataset, TrainConfig(**{**QUICK, "seeds": (1, 2, 3)}))
    assert [r.ok for r in report.seeds] == [True, False, True]
    assert report.failed[0].seed == 2
    assert report.mean == pytest.approx(np.mean([report.seeds[0].best_val_rmse,
                                                 report.seeds[2].best_val_rmse]))
    assert "2" in report.to_structured()["failures"]


def test_report_json_round_trip():
    report = RunReport.from_results([SeedResult(seed=1, best_val_rmse=50.0, best_epoch=3,
                                                stop_epoch=13)])
    assert RunReport.model_validate_json(report.model_dump_json()) == report
    assert report.std == 0.0


@pytest.mark.slow
def test_desk_model_learns_noise_free_gaze(synthetic_dataset):
    config = preset("desk")
    train_config = TrainConfig(batch_size=8, max_epochs=30, seeds=(1,))
    assert train_config.learning_rate == 1e-4
    report = train(config, synthetic_dataset, train_config)
    train_ds, val_ds = split_by_subject(synthetic_dataset, 0.7, 0)
    assert report.seeds[0].best_val_rmse < 0.5 * naive_mean_baseline(train_ds, val_ds)


@pytest.mark.slow
def test_error_grows_with_noise():
    levels = (0.0, 10.0, 3000.0)
    datasets = [generate_synthetic(SyntheticSpec(n_subjects=10, trials_per_subject=50,
                                                 noise_std=noise, seed=7)) for noise in levels]
    ridge = [ridge_baseline(*split_by_subject(ds, 0.7, 0)) for ds in datasets]
    assert ridge[0] < ridge[1] < ridge[2]

    train_config = TrainConfig(batch_size=8, max_epochs=30, seeds=(1, 2, 3))
    medians = []
    for ds in datasets:
        report = train(preset("desk"), ds, train_config)
        medians.append(float(np.median([r.best_val_rmse for r in report.seeds])))
    assert medians[0] < medians[1] < medians[2]
