"""Counter-based random streams.

Every stream is a numpy Philox4x64-10 generator keyed by a 64-bit seed and
started at a 64-bit counter. Philox is a pure function of (key, counter), so
the same pair yields the same sequence on every platform and numpy build that
ships the algorithm. Independent streams for parameters, dropout masks and
batch shuffling are derived from a parent by hashing the parent seed with a
label, never by sharing one sequential generator.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np
from scipy.stats import truncnorm

from config.errors import ParameterError

_UINT64 = (1 << 64) - 1


def derive_seed(seed: int, label: Union[str, int]) -> int:
    """Child seed for `label`: first 8 bytes of sha256("<seed>/<label>")."""
    digest = hashlib.sha256(f"{seed}/{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class RngStream:
    seed: int
    counter: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (0 <= self.seed <= _UINT64) or not (0 <= self.counter <= _UINT64):
            raise ParameterError("seed and counter must be unsigned 64-bit integers")
        self._gen = np.random.Generator(np.random.Philox(key=self.seed, counter=self.counter))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def substream(self, label: Union[str, int]) -> "RngStream":
        return RngStream(derive_seed(self.seed, label))

    def uniform(self, low: float, high: float, shape: Any, dtype: Any = np.float64) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape).astype(dtype)

    def normal(self, std: float, shape: Any, dtype: Any = np.float64) -> np.ndarray:
        return self._gen.normal(0.0, std, size=shape).astype(dtype)

    def truncated_normal(self, std: float, shape: Any, bound: float = 2.0,
                         dtype: Any = np.float64) -> np.ndarray:
        """Normal(0, std) truncated to +-bound standard deviations."""
        values = truncnorm.rvs(-bound, bound, loc=0.0, scale=std, size=shape,
                               random_state=self._gen)
        return np.asarray(values).astype(dtype)

    def bernoulli_mask(self, keep: float, shape: Any) -> np.ndarray:
        return self._gen.random(size=shape) < keep

    def integers(self, low: int, high: int, shape: Any = None) -> np.ndarray:
        return self._gen.integers(low, high, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)
