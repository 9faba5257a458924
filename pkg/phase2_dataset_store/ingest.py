"""Converter for matrix exports of real recordings.

Each input is one shape-prefixed little-endian float32 matrix:

    rank   u32
    dims   u32 x rank
    data   f32 x prod(dims), row-major

`signals` is N x channels x T and `labels` is N x 3 with columns
(subject_id, x_mm, y_mm). Any window length T is accepted.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from rich.console import Console

from config.errors import IngestionError, TruncatedFileError
from config.model_profile import EEG_CHANNELS
from phase2_dataset_store.binary import ByteReader, atomic_write
from phase2_dataset_store.records import Dataset

console = Console()

MAX_RANK = 8


def read_matrix(path: Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"matrix export {path} does not exist")
    reader = ByteReader(path.read_bytes(), what=path.name)
    try:
        rank = reader.u32()
        if not 1 <= rank <= MAX_RANK:
            raise IngestionError(f"{path.name}: invalid rank {rank}")
        dims = tuple(int(d) for d in reader.array("<u4", rank))
        count = math.prod(dims)
        if count * 4 > reader.remaining():
            raise IngestionError(
                f"{path.name}: dims {dims} need {count * 4} bytes, {reader.remaining()} left"
            )
        data = reader.array("<f4", count)
    except TruncatedFileError as exc:
        raise IngestionError(str(exc)) from exc
    if reader.remaining():
        raise IngestionError(f"{path.name}: {reader.remaining()} trailing bytes after matrix data")
    return data.reshape(dims)


def write_matrix(array: np.ndarray, path: Path) -> None:
    array = np.asarray(array, dtype="<f4")
    header = np.array([array.ndim, *array.shape], dtype="<u4").tobytes()
    atomic_write(Path(path), header + array.tobytes())


def _first_bad_row(mask: np.ndarray) -> int:
    return int(np.flatnonzero(mask)[0])


def ingest_matrix_export(signal_path: Path, label_path: Path,
                         expected_channels: int = EEG_CHANNELS) -> Dataset:
    signals = read_matrix(signal_path)
    labels = read_matrix(label_path)

    if signals.ndim != 3:
        raise IngestionError(f"signals must be N x channels x T, got shape {signals.shape}")
    if labels.ndim != 2 or labels.shape[1] != 3:
        raise IngestionError(f"labels must be N x 3 (subject_id, x, y), got shape {labels.shape}")
    if signals.shape[0] != labels.shape[0]:
        raise IngestionError(
            f"signals hold {signals.shape[0]} rows but labels hold {labels.shape[0]}"
        )
    if signals.shape[1] != expected_channels:
        raise IngestionError(
            f"channel count {signals.shape[1]} does not match the expected {expected_channels}"
        )

    bad_signal = ~np.isfinite(signals).all(axis=(1, 2))
    bad_label = ~np.isfinite(labels).all(axis=1)
    if bad_signal.any() or bad_label.any():
        row = _first_bad_row(bad_signal | bad_label)
        where = "signals" if bad_signal[row] else "labels"
        raise IngestionError(f"non-finite value in {where} at row {row}", row=row)

    subject = labels[:, 0]
    bad_subject = (subject < 0) | (subject != np.round(subject))
    if bad_subject.any():
        row = _first_bad_row(bad_subject)
        raise IngestionError(f"subject_id must be a non-negative integer at row {row}", row=row)

    ds = Dataset(
        signals=signals,
        labels=labels[:, 1:],
        subject_ids=subject.astype(np.uint32),
        provenance=f"matrix-export:{Path(signal_path).name}",
    )
    console.print(f"  Ingested {len(ds)} samples, {len(ds.subjects)} subjects, T={ds.timepoints}")
    return ds
