"""NTAR v1 named-tensor archives: weight export, import and warm starting.

Layout (little-endian):

    magic    4 bytes  b"NTAR"
    version  u32      1
    count    u32
    count x  [ name_len u16 | name utf-8 | dtype u8 (0=f32, 1=f64) | rank u8 |
               dims u64 x rank | raw data ]
    crc32    u32      over every byte after the magic, up to the crc itself
"""

from __future__ import annotations

import math
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from config.errors import (
    CheckpointBadMagicError,
    CheckpointChecksumError,
    CheckpointError,
    CheckpointTruncatedError,
)
from phase2_dataset_store.binary import ByteReader, atomic_write, crc32
from phase3_model.layers import Module

MAGIC = b"NTAR"
VERSION = 1
DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
CODE_OF = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}

# Encoder entries imported by a non-strict (warm start) load.
ENCODER_PREFIX = "vit."


@dataclass
class Checkpoint:
    tensors: "OrderedDict[str, np.ndarray]" = field(default_factory=OrderedDict)

    def __len__(self) -> int:
        return len(self.tensors)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def names(self) -> list[str]:
        return list(self.tensors)

    def total_elements(self) -> int:
        return int(sum(a.size for a in self.tensors.values()))

    def subset(self, prefix: str) -> "Checkpoint":
        return Checkpoint(OrderedDict((k, v) for k, v in self.tensors.items()
                                      if k.startswith(prefix)))


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    parts = [struct.pack("<II", VERSION, len(ckpt))]
    for name, array in ckpt.tensors.items():
        array = np.asarray(array)
        if array.dtype not in CODE_OF:
            raise CheckpointError(f"{name}: unsupported dtype {array.dtype}")
        raw_name = name.encode("utf-8")
        if len(raw_name) > 0xFFFF or array.ndim > 0xFF:
            raise CheckpointError(f"{name}: name or rank too large for NTAR")
        parts.append(struct.pack("<H", len(raw_name)))
        parts.append(raw_name)
        parts.append(struct.pack("<BB", CODE_OF[array.dtype], array.ndim))
        parts.append(struct.pack(f"<{array.ndim}Q", *array.shape))
        parts.append(np.ascontiguousarray(array, dtype=array.dtype.newbyteorder("<")).tobytes())
    body = b"".join(parts)
    return MAGIC + body + struct.pack("<I", crc32(body))


def decode_checkpoint(buf: bytes) -> Checkpoint:
    """Parse the whole archive, then verify its checksum."""
    if buf[:len(MAGIC)] != MAGIC:
        raise CheckpointBadMagicError(f"not an NTAR archive: magic {buf[:len(MAGIC)]!r}")
    reader = ByteReader(buf, len(MAGIC), CheckpointTruncatedError, "NTAR archive")
    version, count = reader.unpack("II")
    if version != VERSION:
        raise CheckpointError(f"unsupported NTAR version {version}")

    tensors: OrderedDict[str, np.ndarray] = OrderedDict()
    for _ in range(count):
        raw_name = reader.take(reader.u16())
        try:
            name = raw_name.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CheckpointError(f"tensor name at byte {reader.pos} is not valid utf-8") from exc
        code, rank = reader.u8(), reader.u8()
        if code not in DTYPE_CODES:
            raise CheckpointError(f"{name}: unknown dtype code {code}")
        dims = reader.unpack(f"{rank}Q") if rank else ()
        count_elems = math.prod(dims)
        itemsize = DTYPE_CODES[code].itemsize
        if count_elems * itemsize > reader.remaining():
            raise CheckpointTruncatedError(
                f"{name}: dims {dims} need {count_elems * itemsize} bytes, "
                f"{reader.remaining()} left"
            )
        data = reader.array(DTYPE_CODES[code], count_elems).reshape(dims)
        if name in tensors:
            raise CheckpointError(f"duplicate tensor name {name!r}")
        tensors[name] = data.astype(DTYPE_CODES[code].newbyteorder("="))

    (stored,) = reader.unpack("I")
    if reader.remaining():
        raise CheckpointError(f"{reader.remaining()} trailing bytes after NTAR checksum")
    actual = crc32(buf[len(MAGIC):reader.pos - 4])
    if actual != stored:
        raise CheckpointChecksumError(
            f"NTAR checksum mismatch: stored {stored:#010x}, computed {actual:#010x}"
        )
    return Checkpoint(tensors)


def save_checkpoint(ckpt: Checkpoint, path: Path) -> None:
    atomic_write(Path(path), encode_checkpoint(ckpt))


def load_checkpoint(path: Path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint {path} does not exist")
    return decode_checkpoint(path.read_bytes())


def export_weights(model: Module) -> Checkpoint:
    """All parameters and normalisation buffers, copied."""
    return Checkpoint(model.state_dict())


def import_weights(model: Module, ckpt: Checkpoint, strict: bool = True) -> Module:
    """Load `ckpt` into `model`.

    strict: names must match the model exactly. Non-strict: only the encoder
    entries (``vit.*``) the model also has are loaded; everything else, the
    regression head in particular, keeps its current values. Shape
    mismatches are always errors. Every entry is validated before the first
    assignment, so a failed import leaves the model untouched.
    """
    expected = model.state_dict()
    if strict:
        unknown = [n for n in ckpt.names() if n not in expected]
        missing = [n for n in expected if n not in ckpt.tensors]
        if unknown or missing:
            raise CheckpointError(
                f"checkpoint does not match the model: unknown {unknown}, missing {missing}"
            )
        selected = ckpt.names()
    else:
        selected = [n for n in ckpt.names() if n.startswith(ENCODER_PREFIX) and n in expected]

    mismatched = [
        f"{n} {tuple(ckpt[n].shape)} != {tuple(expected[n].shape)}"
        for n in selected
        if ckpt[n].shape != expected[n].shape
    ]
    if mismatched:
        raise CheckpointError(f"shape mismatch for {len(mismatched)} tensor(s): {mismatched}")

    for name in selected:
        model.assign(name, ckpt[name])
    return model
