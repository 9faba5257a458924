"""Latency harness and the patch-projection sweep."""

import numpy as np
import pytest

from autodiff.rng import RngStream
from config.errors import ConfigError
from phase3_model.checkpoint import export_weights, save_checkpoint
from phase3_model.config import preset
from phase3_model.network import build_model
from phase5_interface.benchmark import (
    BenchResult,
    checkpoint_name,
    geometry_config,
    measure_latency,
    patch_sweep,
)


def test_measure_latency_statistics(desk_config):
    model = build_model(desk_config, RngStream(0))
    result = measure_latency(model, (4, desk_config.in_channels, desk_config.timepoints),
                             repetitions=10, warmup=3)
    assert len(result.timings) == 10
    assert result.latency_p10 <= result.latency_median <= result.latency_p90
    assert result.latency_median == pytest.approx(float(np.median(result.timings)))
    assert result.tokens == desk_config.token_count()
    assert result.flops > result.attention_flops > 0
    assert result.per_sample_median == pytest.approx(result.latency_median / 4)
    assert not model.training


@pytest.mark.parametrize("repetitions, warmup", [(9, 3), (10, 2)])
def test_too_few_passes_is_config_error(desk_config, repetitions, warmup):
    model = build_model(desk_config, RngStream(0))
    with pytest.raises(ConfigError):
        measure_latency(model, (2, desk_config.in_channels, desk_config.timepoints),
                        repetitions=repetitions, warmup=warmup)


def test_percentiles_must_be_ordered():
    with pytest.raises(ConfigError):
        BenchResult(label="x", kernel=1, stride=1, tokens=1, flops=1, attention_flops=1,
                    latency_median=1.0, latency_p10=2.0, latency_p90=3.0, batch_size=1,
                    warmup=3, repetitions=10, timings=[1.0])


def test_invalid_geometry_fails_before_any_timing(desk_config, monkeypatch):
    from phase5_interface import benchmark

    calls = []
    monkeypatch.setattr(benchmark, "measure_latency", lambda *a, **k: calls.append(a))
    with pytest.raises(ConfigError):
        patch_sweep(desk_config, [(1, 1), (9, 9)], repetitions=10)
    assert calls == []
    with pytest.raises(ConfigError):
        geometry_config(desk_config, 9, 1)


def test_desk_sweep_table(desk_config, tiny_dataset):
    table = patch_sweep(desk_config, [(2, 2), (1, 1), (4, 4)], tiny_dataset, batch_size=4,
                        repetitions=10)
    assert list(table.frame["tokens"]) == [8, 4, 2]
    assert table.frame["speedup_batch"].min() >= 0.0
    assert table.frame["speedup_batch"].max() == pytest.approx(table.max_speedup)
    structured = table.to_structured()
    assert len(structured["geometries"]) == 3
    assert structured["geometries"][0]["val_rmse"] is None


def test_sweep_reports_checkpoint_rmse(desk_config, tiny_dataset, tmp_path):
    config = geometry_config(desk_config, 2, 2)
    save_checkpoint(export_weights(build_model(config, RngStream(1))),
                    tmp_path / checkpoint_name(2, 2))
    table = patch_sweep(desk_config, [(1, 1), (2, 2)], tiny_dataset, batch_size=4,
                        repetitions=10, checkpoint_dir=tmp_path)
    rmse = dict(zip(table.frame["tokens"], table.frame["val_rmse"]))
    assert rmse[4] > 0
    assert rmse[8] is None or np.isnan(rmse[8])


@pytest.mark.slow
def test_fewer_tokens_run_faster_at_bench_scale():
    table = patch_sweep(preset("bench"), [(1, 1), (2, 2), (7, 7)], batch_size=32,
                        repetitions=30)
    medians = list(table.frame["median_s"])
    assert list(table.frame["tokens"]) == [14, 7, 2]
    assert medians[0] > medians[1] > medians[2]
    assert medians[0] / medians[2] >= 2.0
    assert table.max_speedup >= 2.0


@pytest.mark.slow
def test_latency_grows_with_batch_size():
    config = preset("bench")
    model = build_model(config, RngStream(0))
    small = measure_latency(model, (16, config.in_channels, config.timepoints), repetitions=10)
    large = measure_latency(model, (32, config.in_channels, config.timepoints), repetitions=10)
    assert large.latency_median > small.latency_median
    assert large.flops == 2 * small.flops


@pytest.mark.slow
def test_repeated_measurements_agree_within_a_quarter(desk_config):
    model = build_model(desk_config, RngStream(0))
    shape = (8, desk_config.in_channels, desk_config.timepoints)
    first = measure_latency(model, shape, repetitions=30)
    second = measure_latency(model, shape, repetitions=30)
    ratio = second.latency_median / first.latency_median
    assert 0.8 <= ratio <= 1.25
