"""Fractal digit map from p-adic integers to the reals, and wave generation.

A wave of level ``L`` samples the p-adic line ``w = C*k**m + B (mod p**L)``
for ``k = 0 .. p**L - 1`` and sends each ``w`` to the reals through the
digit map.  Two variants of the map are available:

* digit-power: ``sum(a_n**D * p**-(n+1))``
* scale-power: ``sum(a_n * p**(-(n+1)*D))``

``0**D`` is taken to be 0 for every ``D > 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .padic import PAdicNumber, check_prime


class MapKind(str, enum.Enum):
    DIGIT_POWER = "digit-power"
    SCALE_POWER = "scale-power"

    def __str__(self) -> str:
        return self.value


def int_digits(n: int, p: int, length: int | None = None) -> list[int]:
    """Base-``p`` digits of ``n >= 0``, lowest first, optionally fixed-length."""
    if n < 0:
        raise DomainError("int_digits expects a non-negative integer")
    out = []
    if length is None:
        while n:
            n, a = divmod(n, p)
            out.append(a)
        return out
    for _ in range(length):
        n, a = divmod(n, p)
        out.append(a)
    return out


def _check_dim(D: float) -> float:
    D = float(D)
    if not D > 0 or not math.isfinite(D):
        raise DomainError(f"fractal dimension must be positive, got {D}")
    return D


def map_digits(digits: Sequence[int], p: int, D: float, kind: MapKind = MapKind.DIGIT_POWER) -> float:
    """Apply the digit map to a lowest-first digit sequence."""
    D = _check_dim(D)
    kind = MapKind(kind)
    total = 0.0
    if kind is MapKind.DIGIT_POWER:
        for n, a in enumerate(digits):
            if a:
                total += float(a) ** D * float(p) ** -(n + 1)
    else:
        for n, a in enumerate(digits):
            if a:
                total += a * float(p) ** (-(n + 1) * D)
    return total


def real_map(x: PAdicNumber, D: float, kind: MapKind = MapKind.DIGIT_POWER) -> float:
    """Digit map of a p-adic integer.

    ``x`` must have ``v >= 0``; its digits are shifted by ``v`` leading zeros
    so that the map sees the absolute digit positions ``0 .. v + N - 1``.
    """
    _check_dim(D)
    if x.is_zero:
        return 0.0
    if x.v < 0:
        raise DomainError("map restricted to p-adic integers")
    return map_digits((0,) * x.v + x.digits, x.p, D, kind)


def self_affinity_check(j: int, a: int, p: int, D: float,
                        kind: MapKind = MapKind.DIGIT_POWER, tol: float = 1e-12) -> bool:
    """Check the one-digit recursion of the map at ``a + p*j``.

    digit-power: ``f(a + p*j) = (a**D + f(j)) / p``;
    scale-power: ``f(a + p*j) = (a + f(j)) * p**-D``.
    """
    check_prime(p)
    if not 0 <= a < p or j < 0:
        raise DomainError("need 0 <= a < p and j >= 0")
    kind = MapKind(kind)
    tail = int_digits(j, p)
    lhs = map_digits([a] + tail, p, D, kind)
    head = float(a) ** D if a else 0.0
    if kind is MapKind.DIGIT_POWER:
        rhs = (head + map_digits(tail, p, D, kind)) / p
    else:
        rhs = (a + map_digits(tail, p, D, kind)) * float(p) ** -D
    return abs(lhs - rhs) <= tol


@dataclass(frozen=True)
class WaveSpec:
    """Parameters of one p-adic wave.

    ``C`` and ``B`` are reduced modulo ``p**level`` on construction.
    """

    p: int
    D: float
    level: int
    C: int = 1
    B: int = 0
    map_kind: MapKind = MapKind.DIGIT_POWER
    degree: int = 1
    time_window: tuple[float, float] = (0.0, 1.0)
    price_affine: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        check_prime(self.p)
        _check_dim(self.D)
        if not isinstance(self.level, int) or self.level < 1:
            raise DomainError("level must be an integer >= 1")
        if not isinstance(self.degree, int) or self.degree < 1:
            raise DomainError("monomial degree must be an integer >= 1")
        t0, t1 = (float(t) for t in self.time_window)
        if not t0 < t1:
            raise DomainError("time window needs t0 < t1")
        y0, ys = (float(y) for y in self.price_affine)
        if ys == 0:
            raise DomainError("price scale must be nonzero")
        mod = self.p**self.level
        object.__setattr__(self, "D", float(self.D))
        object.__setattr__(self, "map_kind", MapKind(self.map_kind))
        object.__setattr__(self, "C", int(self.C) % mod)
        object.__setattr__(self, "B", int(self.B) % mod)
        object.__setattr__(self, "time_window", (t0, t1))
        object.__setattr__(self, "price_affine", (y0, ys))

    @property
    def size(self) -> int:
        return self.p**self.level

    @property
    def spacing(self) -> float:
        t0, t1 = self.time_window
        return (t1 - t0) / (self.size - 1)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "D": self.D,
            "level": self.level,
            "C": self.C,
            "B": self.B,
            "map_kind": self.map_kind.value,
            "degree": self.degree,
            "time_window": list(self.time_window),
            "price_affine": list(self.price_affine),
        }

    @classmethod
    def from_dict(cls, d: dict) -> WaveSpec:
        return cls(
            p=int(d["p"]),
            D=float(d["D"]),
            level=int(d["level"]),
            C=int(d["C"]),
            B=int(d["B"]),
            map_kind=MapKind(d["map_kind"]),
            degree=int(d.get("degree", 1)),
            time_window=tuple(d.get("time_window", (0.0, 1.0))),
            price_affine=tuple(d.get("price_affine", (0.0, 1.0))),
        )


@dataclass(frozen=True)
class WaveCurve:
    spec: WaveSpec
    t: tuple[float, ...] = field(repr=False)
    y: tuple[float, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.t)

    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.t, self.y))


def _digit_count(k: int, p: int, level: int) -> int:
    """Digits used at index ``k``: the level, or more once ``k`` outgrows it."""
    return max(level, len(int_digits(k, p)))


def raw_values(spec: WaveSpec, ks: Iterable[int]) -> list[float]:
    """Unscaled map values ``f((C*k**m + B) mod p**L_k)`` at each index.

    ``L_k`` is the wave level for ``k < p**level`` and the digit length of
    ``k`` past it, so the formula continues beyond one period.
    """
    p, out = spec.p, []
    for k in ks:
        if k < 0:
            raise DomainError("wave index must be non-negative")
        width = _digit_count(k, p, spec.level)
        w = (spec.C * k**spec.degree + spec.B) % p**width
        out.append(map_digits(int_digits(w, p, width), p, spec.D, spec.map_kind))
    return out


def wave_values(spec: WaveSpec, ks: Iterable[int]) -> list[float]:
    """Wave ordinates at indices ``ks`` after the price transform."""
    y0, ys = spec.price_affine
    return [y0 + ys * r for r in raw_values(spec, ks)]


def wave_times(spec: WaveSpec, ks: Iterable[int]) -> list[float]:
    t0, t1 = spec.time_window
    last = spec.size - 1
    return [t0 + (t1 - t0) * k / last for k in ks]


def wave_generate(spec: WaveSpec) -> WaveCurve:
    """Sample one full period (``p**level`` points) of the wave."""
    ks = range(spec.size)
    return WaveCurve(spec, tuple(wave_times(spec, ks)), tuple(wave_values(spec, ks)))


def digit_matrix(p: int, level: int, C: int, B: int, degree: int = 1) -> np.ndarray:
    """Digits of ``C*k**m + B mod p**level`` for every k, shape ``(p**level, level)``."""
    n = p**level
    w = [(C * k**degree + B) % n for k in range(n)]
    return np.array([int_digits(x, p, level) for x in w], dtype=np.int64).reshape(n, level)


def raw_matrix(digits: np.ndarray, p: int, dims: np.ndarray, kind: MapKind) -> np.ndarray:
    """Vectorised digit map for many dimensions at once.

    ``digits`` has shape ``(n, L)``; the result has shape ``(len(dims), n)``.
    """
    dims = np.atleast_1d(np.asarray(dims, dtype=float))
    L = digits.shape[1]
    pos = np.arange(1, L + 1, dtype=float)
    a = digits.astype(float)
    if MapKind(kind) is MapKind.DIGIT_POWER:
        powered = np.where(a[None] > 0, np.power(a[None], dims[:, None, None]), 0.0)
        return powered @ (float(p) ** -pos)
    weights = float(p) ** (-pos[None, :] * dims[:, None])
    return weights @ a.T


def slope_changes(y: Sequence[float], periodic: bool = True, rtol: float = 1e-9) -> int:
    """Count vertices where consecutive chord slopes differ.

    With ``periodic`` the sample after the last one is the first sample of
    the next period (``w`` wraps modulo ``p**L``), so the final point is a
    vertex too and a curve of ``n`` samples has ``n - 1`` candidate vertices.
    """
    ys = list(y)
    if periodic:
        ys.append(ys[0])
    slopes = [b - a for a, b in zip(ys, ys[1:])]
    scale = max(abs(s) for s in slopes) or 1.0
    return sum(1 for s0, s1 in zip(slopes, slopes[1:]) if abs(s1 - s0) > rtol * scale)
