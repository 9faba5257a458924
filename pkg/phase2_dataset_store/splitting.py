"""Subject-wise train/validation partitioning."""

from __future__ import annotations

import math

import numpy as np

from autodiff.rng import RngStream
from config.errors import SplitError
from phase2_dataset_store.records import Dataset


def train_subject_count(n_subjects: int, train_fraction: float) -> int:
    """round(train_fraction * n), half rounding up, kept within [1, n - 1]."""
    count = math.floor(train_fraction * n_subjects + 0.5)
    return min(max(count, 1), n_subjects - 1)


def split_subjects(subjects: np.ndarray, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    subjects = np.unique(subjects)
    if len(subjects) < 2:
        raise SplitError(
            f"need at least 2 distinct subjects for a subject-disjoint split, got {len(subjects)}"
        )
    if not 0.0 < train_fraction < 1.0:
        raise SplitError(f"train_fraction must be in (0, 1), got {train_fraction}")
    order = RngStream(seed).substream("split").permutation(len(subjects))
    n_train = train_subject_count(len(subjects), train_fraction)
    return np.sort(subjects[order[:n_train]]), np.sort(subjects[order[n_train:]])


def split_by_subject(ds: Dataset, train_fraction: float = 0.7, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Partition `ds` by subject; sample order within each split follows `ds`.

    The subject assignment depends only on the set of subject ids and the
    seed, never on sample order.
    """
    train_subjects, val_subjects = split_subjects(ds.subject_ids, train_fraction, seed)
    in_train = np.isin(ds.subject_ids, train_subjects)
    train = ds.subset(np.flatnonzero(in_train))
    val = ds.subset(np.flatnonzero(~in_train))
    assert_subject_disjoint(train, val)
    return train, val


def assert_subject_disjoint(train: Dataset, val: Dataset) -> None:
    shared = np.intersect1d(train.subjects, val.subjects)
    if shared.size:
        raise SplitError(f"subjects {shared.tolist()} appear in both splits")
