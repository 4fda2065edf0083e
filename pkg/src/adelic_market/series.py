"""Price series container shared by the simulator, fitting and I/O layers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class PriceSeries:
    """Strictly increasing epoch-second timestamps with positive finite values.

    The constructor checks ordering and positivity; callers that need a
    minimum length (fitting needs 4 points) call :meth:`require`.
    """

    timestamps: tuple[float, ...]
    values: tuple[float, ...]
    label: str = "close"

    def __post_init__(self) -> None:
        ts = tuple(float(t) for t in self.timestamps)
        vs = tuple(float(v) for v in self.values)
        if len(ts) != len(vs):
            raise DataError("timestamps and values differ in length")
        if not ts:
            raise DataError("empty price series")
        for i, (a, b) in enumerate(zip(ts, ts[1:]), start=1):
            if not b > a:
                raise DataError(f"timestamps not strictly increasing at index {i}")
        for i, v in enumerate(vs):
            if not (math.isfinite(v) and v > 0):
                raise DataError(f"value at index {i} is not a positive finite number: {v}")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vs)

    def __len__(self) -> int:
        return len(self.values)

    def require(self, min_length: int = 4) -> PriceSeries:
        if len(self) < min_length:
            raise DataError(f"series needs at least {min_length} points, got {len(self)}")
        return self

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.timestamps)

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.values)

    @classmethod
    def from_arrays(cls, t: Sequence[float], y: Sequence[float], label: str = "close") -> PriceSeries:
        return cls(tuple(float(v) for v in t), tuple(float(v) for v in y), label)
