"""Little-endian record reading and atomic file writes shared by the EEGDS and NTAR formats."""

from __future__ import annotations

import os
import struct
import zlib
from pathlib import Path
from typing import Type

import numpy as np

from config.errors import TruncatedFileError


class ByteReader:
    """Forward-only cursor over a bytes buffer.

    Every read checks the remaining length first and raises `truncated`
    (a TruncatedFileError subclass) instead of returning short data.
    """

    def __init__(self, buf: bytes, offset: int = 0,
                 truncated: Type[TruncatedFileError] = TruncatedFileError, what: str = "file"):
        self.buf = buf
        self.pos = offset
        self.truncated = truncated
        self.what = what

    def remaining(self) -> int:
        return len(self.buf) - self.pos

    def take(self, n: int) -> bytes:
        if n < 0 or self.remaining() < n:
            raise self.truncated(
                f"{self.what} truncated at byte {self.pos}: needed {n}, {self.remaining()} left"
            )
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))

    def u8(self) -> int:
        return self.unpack("B")[0]

    def u16(self) -> int:
        return self.unpack("H")[0]

    def u32(self) -> int:
        return self.unpack("I")[0]

    def u64(self) -> int:
        return self.unpack("Q")[0]

    def array(self, dtype: str, count: int) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(count * itemsize), dtype=dtype, count=count)


def crc32(payload: bytes) -> int:
    return zlib.crc32(payload) & 0xFFFFFFFF


def atomic_write(path: Path, data: bytes) -> None:
    """Write to a sibling temp file and rename over `path`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    with open(tmp, "wb") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)
