"""In-memory EEG records: samples and datasets."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from config.errors import DataError

SIGNAL_UNIT = "uV"
LABEL_UNIT = "mm"


@dataclass(frozen=True)
class EEGSample:
    """One windowed recording: signal [channels, T] in microvolts, gaze (x, y) in mm."""

    signal: np.ndarray
    label: np.ndarray
    subject_id: int


@dataclass(frozen=True)
class DatasetMetadata:
    channels: int
    timepoints: int
    signal_unit: str = SIGNAL_UNIT
    label_unit: str = LABEL_UNIT
    provenance: str = "unknown"


def _frozen(array: np.ndarray, dtype: str) -> np.ndarray:
    out = np.ascontiguousarray(array, dtype=dtype)
    if out is array:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered, immutable collection of EEG samples with a uniform shape.

    Stored column-wise: signals [N, C, T] float32, labels [N, 2] float32,
    subject_ids [N] uint32. Equality compares content bit-for-bit and ignores
    the provenance tag.
    """

    signals: np.ndarray
    labels: np.ndarray
    subject_ids: np.ndarray
    provenance: str = field(default="unknown")

    def __post_init__(self) -> None:
        signals = _frozen(self.signals, "float32")
        labels = _frozen(self.labels, "float32")
        subject_ids = _frozen(self.subject_ids, "uint32")
        if signals.ndim != 3:
            raise DataError(f"signals must be [N, channels, T], got shape {signals.shape}")
        n = signals.shape[0]
        if n == 0:
            raise DataError("a dataset needs at least one sample")
        if labels.shape != (n, 2):
            raise DataError(f"labels must be [{n}, 2], got shape {labels.shape}")
        if subject_ids.shape != (n,):
            raise DataError(f"subject_ids must be [{n}], got shape {subject_ids.shape}")
        if not np.all(np.isfinite(signals)):
            raise DataError("signals contain non-finite values")
        if not np.all(np.isfinite(labels)):
            raise DataError("labels contain non-finite values")
        object.__setattr__(self, "signals", signals)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "subject_ids", subject_ids)

    @classmethod
    def from_samples(cls, samples: Sequence[EEGSample], provenance: str = "unknown") -> "Dataset":
        if not samples:
            raise DataError("a dataset needs at least one sample")
        shapes = {s.signal.shape for s in samples}
        if len(shapes) != 1:
            raise DataError(f"samples disagree on signal shape: {sorted(shapes)}")
        return cls(
            signals=np.stack([s.signal for s in samples]),
            labels=np.stack([np.asarray(s.label).reshape(2) for s in samples]),
            subject_ids=np.array([s.subject_id for s in samples]),
            provenance=provenance,
        )

    @property
    def channels(self) -> int:
        return self.signals.shape[1]

    @property
    def timepoints(self) -> int:
        return self.signals.shape[2]

    @property
    def subjects(self) -> np.ndarray:
        return np.unique(self.subject_ids)

    @property
    def metadata(self) -> DatasetMetadata:
        return DatasetMetadata(self.channels, self.timepoints, provenance=self.provenance)

    def __len__(self) -> int:
        return self.signals.shape[0]

    def __getitem__(self, i: int) -> EEGSample:
        return EEGSample(self.signals[i], self.labels[i], int(self.subject_ids[i]))

    def __iter__(self) -> Iterator[EEGSample]:
        return (self[i] for i in range(len(self)))

    @property
    def samples(self) -> list[EEGSample]:
        return list(self)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.signals[idx], self.labels[idx], self.subject_ids[idx], self.provenance)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.signals.shape == other.signals.shape
            and self.signals.tobytes() == other.signals.tobytes()
            and self.labels.tobytes() == other.labels.tobytes()
            and self.subject_ids.tobytes() == other.subject_ids.tobytes()
        )

    __hash__ = None  # type: ignore[assignment]

    def digest(self) -> str:
        """sha256 over shapes and little-endian content; identifies the data, not the file."""
        h = hashlib.sha256()
        h.update(np.array(self.signals.shape, dtype="<u8").tobytes())
        h.update(self.signals.astype("<f4", copy=False).tobytes())
        h.update(self.labels.astype("<f4", copy=False).tobytes())
        h.update(self.subject_ids.astype("<u4", copy=False).tobytes())
        return h.hexdigest()
