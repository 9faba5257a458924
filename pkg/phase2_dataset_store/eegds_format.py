"""EEGDS v1 dataset files.

Layout (all integers and floats little-endian):

    magic        4 bytes  b"EEGD"
    version      u32      1
    n_samples    u32
    channels     u16
    timepoints   u32
    label_dim    u8       2
    n_samples x  [ subject_id u32 | label f32 x label_dim | signal f32 x channels*timepoints ]
    crc32        u32      over every byte after the magic, up to the crc itself

Signals are row-major channel x time. File size is
19 + n * (4 + 4 * label_dim + 4 * channels * timepoints) + 4.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from config.errors import (
    BadMagicError,
    ChecksumMismatchError,
    DataError,
    FormatError,
    TruncatedFileError,
)
from phase2_dataset_store.binary import ByteReader, atomic_write, crc32
from phase2_dataset_store.records import Dataset

MAGIC = b"EEGD"
VERSION = 1
LABEL_DIM = 2
HEADER = struct.Struct("<IIHIB")
HEADER_SIZE = len(MAGIC) + HEADER.size
CRC_SIZE = 4


def record_dtype(channels: int, timepoints: int) -> np.dtype:
    return np.dtype([
        ("subject_id", "<u4"),
        ("label", "<f4", (LABEL_DIM,)),
        ("signal", "<f4", (channels, timepoints)),
    ])


def file_size(n_samples: int, channels: int, timepoints: int) -> int:
    return HEADER_SIZE + n_samples * (4 + 4 * LABEL_DIM + 4 * channels * timepoints) + CRC_SIZE


def encode_dataset(ds: Dataset) -> bytes:
    records = np.empty(len(ds), dtype=record_dtype(ds.channels, ds.timepoints))
    records["subject_id"] = ds.subject_ids
    records["label"] = ds.labels
    records["signal"] = ds.signals
    body = HEADER.pack(VERSION, len(ds), ds.channels, ds.timepoints, LABEL_DIM) + records.tobytes()
    return MAGIC + body + struct.pack("<I", crc32(body))


def decode_dataset(buf: bytes, provenance: str = "eegds") -> Dataset:
    if buf[:len(MAGIC)] != MAGIC:
        raise BadMagicError(f"not an EEGDS file: magic {buf[:len(MAGIC)]!r}")
    reader = ByteReader(buf, len(MAGIC), TruncatedFileError, "EEGDS file")
    version, n, channels, timepoints, label_dim = reader.unpack("IIHIB")
    if version != VERSION:
        raise FormatError(f"unsupported EEGDS version {version}")
    if label_dim != LABEL_DIM:
        raise FormatError(f"EEGDS label_dim must be {LABEL_DIM}, got {label_dim}")

    if channels == 0 or timepoints == 0:
        raise FormatError(f"EEGDS geometry {channels} x {timepoints} has an empty axis")
    record_size = 4 + 4 * LABEL_DIM + 4 * channels * timepoints
    if n * record_size > reader.remaining() - CRC_SIZE:
        raise TruncatedFileError(
            f"EEGDS file declares {n} records of {record_size} bytes but holds "
            f"{max(reader.remaining() - CRC_SIZE, 0)} payload bytes"
        )
    dtype = record_dtype(channels, timepoints)
    payload = reader.take(n * dtype.itemsize)
    (stored_crc,) = reader.unpack("I")
    if reader.remaining():
        raise FormatError(f"{reader.remaining()} trailing bytes after EEGDS checksum")
    actual = crc32(buf[len(MAGIC):reader.pos - CRC_SIZE])
    if actual != stored_crc:
        raise ChecksumMismatchError(f"EEGDS checksum mismatch: stored {stored_crc:#010x}, "
                                    f"computed {actual:#010x}")

    records = np.frombuffer(payload, dtype=dtype, count=n)
    return Dataset(
        signals=records["signal"].astype(np.float32),
        labels=records["label"].astype(np.float32),
        subject_ids=records["subject_id"].astype(np.uint32),
        provenance=provenance,
    )


def write_dataset(ds: Dataset, path: Path) -> None:
    atomic_write(Path(path), encode_dataset(ds))


def read_dataset(path: Path) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset {path} does not exist")
    return decode_dataset(path.read_bytes(), provenance=f"eegds:{path.name}")
