"""Subject-disjoint train/validation split."""

import numpy as np
import pytest

from config.errors import SplitError
from phase2_dataset_store.records import Dataset
from phase2_dataset_store.splitting import (
    assert_subject_disjoint,
    split_by_subject,
    split_subjects,
    train_subject_count,
)


def _dataset(subjects, per_subject=3):
    ids = np.repeat(np.asarray(subjects), per_subject)
    n = len(ids)
    return Dataset(
        signals=np.arange(n * 2 * 3, dtype=np.float32).reshape(n, 2, 3),
        labels=np.zeros((n, 2)),
        subject_ids=ids,
    )


@pytest.mark.parametrize("seed", range(100))
def test_ten_subjects_split_seven_three_and_disjoint(seed):
    train, val = split_by_subject(_dataset(range(10)), 0.7, seed)
    assert len(train.subjects) == 7
    assert len(val.subjects) == 3
    assert not set(train.subjects) & set(val.subjects)
    assert len(train) + len(val) == 30


def test_rounding_rule():
    assert train_subject_count(10, 0.7) == 7
    assert train_subject_count(3, 0.5) == 2  # 1.5 rounds up
    assert train_subject_count(2, 0.99) == 1
    assert train_subject_count(4, 0.01) == 1


def test_same_seed_same_split_and_seeds_differ():
    ds = _dataset(range(20))
    a = split_by_subject(ds, 0.7, 3)
    b = split_by_subject(ds, 0.7, 3)
    assert a[0] == b[0] and a[1] == b[1]
    assignments = {tuple(split_by_subject(ds, 0.7, s)[1].subjects) for s in range(10)}
    assert len(assignments) > 1


def test_assignment_ignores_sample_order():
    ds = _dataset([4, 9, 2, 7, 5, 1])
    order = np.random.default_rng(0).permutation(len(ds))
    shuffled = ds.subset(order)
    assert (split_by_subject(ds, 0.7, 8)[0].subjects.tolist()
            == split_by_subject(shuffled, 0.7, 8)[0].subjects.tolist())


def test_sample_order_is_preserved_within_splits():
    ds = _dataset(range(6))
    train, _ = split_by_subject(ds, 0.5, 1)
    first_values = train.signals[:, 0, 0]
    assert np.all(np.diff(first_values) > 0)


def test_single_subject_cannot_be_split():
    with pytest.raises(SplitError):
        split_by_subject(_dataset([3]), 0.7, 0)


def test_fraction_must_be_open_interval():
    with pytest.raises(SplitError):
        split_subjects(np.arange(4), 1.0, 0)
    with pytest.raises(SplitError):
        split_subjects(np.arange(4), 0.0, 0)


def test_overlap_is_detected():
    ds = _dataset(range(3))
    with pytest.raises(SplitError):
        assert_subject_disjoint(ds.subset([0, 3]), ds.subset([1, 6]))
