"""Matrix-export ingestion."""

import numpy as np
import pytest

from config.errors import IngestionError
from phase2_dataset_store.ingest import ingest_matrix_export, read_matrix, write_matrix


def _export(tmp_path, n=6, channels=129, timepoints=40, labels=None):
    rng = np.random.default_rng(1)
    signals = rng.normal(size=(n, channels, timepoints)).astype(np.float32)
    if labels is None:
        labels = np.column_stack([np.arange(n) % 3, rng.uniform(50, 250, n), rng.uniform(30, 200, n)])
    sig_path, lab_path = tmp_path / "signals.bin", tmp_path / "labels.bin"
    write_matrix(signals, sig_path)
    write_matrix(labels, lab_path)
    return signals, np.asarray(labels, dtype=np.float32), sig_path, lab_path


def test_ingest_keeps_values_and_any_window_length(tmp_path):
    signals, labels, sig_path, lab_path = _export(tmp_path, timepoints=37)
    ds = ingest_matrix_export(sig_path, lab_path)
    assert ds.timepoints == 37
    np.testing.assert_array_equal(ds.signals, signals)
    np.testing.assert_array_equal(ds.labels, labels[:, 1:])
    assert ds.subject_ids.tolist() == [0, 1, 2, 0, 1, 2]


def test_matrix_header(tmp_path):
    path = tmp_path / "m.bin"
    write_matrix(np.ones((2, 3)), path)
    raw = path.read_bytes()
    assert np.frombuffer(raw[:12], dtype="<u4").tolist() == [2, 2, 3]
    assert read_matrix(path).shape == (2, 3)


def test_wrong_channel_count(tmp_path):
    *_, sig_path, lab_path = _export(tmp_path, channels=64)
    with pytest.raises(IngestionError):
        ingest_matrix_export(sig_path, lab_path)
    assert ingest_matrix_export(sig_path, lab_path, expected_channels=64).channels == 64


def test_row_count_mismatch(tmp_path):
    labels = np.zeros((5, 3))
    *_, sig_path, lab_path = _export(tmp_path, labels=labels)
    with pytest.raises(IngestionError):
        ingest_matrix_export(sig_path, lab_path)


def test_label_shape(tmp_path):
    *_, sig_path, lab_path = _export(tmp_path, labels=np.zeros((6, 2)))
    with pytest.raises(IngestionError):
        ingest_matrix_export(sig_path, lab_path)


def test_non_finite_value_reports_row(tmp_path):
    labels = np.column_stack([np.zeros(6), np.ones(6), np.ones(6)])
    labels[4, 2] = np.nan
    *_, sig_path, lab_path = _export(tmp_path, labels=labels)
    with pytest.raises(IngestionError) as info:
        ingest_matrix_export(sig_path, lab_path)
    assert info.value.row == 4


def test_fractional_subject_id(tmp_path):
    labels = np.column_stack([np.zeros(6), np.ones(6), np.ones(6)])
    labels[2, 0] = 1.5
    *_, sig_path, lab_path = _export(tmp_path, labels=labels)
    with pytest.raises(IngestionError) as info:
        ingest_matrix_export(sig_path, lab_path)
    assert info.value.row == 2


def test_truncated_matrix(tmp_path):
    _, _, sig_path, lab_path = _export(tmp_path)
    sig_path.write_bytes(sig_path.read_bytes()[:-5])
    with pytest.raises(IngestionError):
        ingest_matrix_export(sig_path, lab_path)


def test_missing_file(tmp_path):
    with pytest.raises(IngestionError):
        read_matrix(tmp_path / "absent.bin")


def test_overflowing_dims_are_ingestion_error(tmp_path):
    path = tmp_path / "huge.bin"
    path.write_bytes(np.array([3, 2 ** 31, 2 ** 31, 4], dtype="<u4").tobytes() + b"\0" * 16)
    with pytest.raises(IngestionError):
        read_matrix(path)
