"""Fit p-adic waves to price series and extrapolate them.

The search is exhaustive over the discrete parameters (prime, level, map
kind, slope C, intercept B, monomial degree) and a grid over the fractal
dimension D, followed by a bounded 1-D refinement of D.  For every raw wave
the price transform ``y0 + y_scale * raw`` is solved in closed form by least
squares, so the objective is the RMSE of the best affine image of the wave.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__
from .errors import DataError, DomainError, NumericalError
from .series import PriceSeries
from .waves import MapKind, WaveSpec, digit_matrix, raw_matrix, raw_values

SCHEMA_VERSION = 1


def rmse(a: Sequence[float], b: Sequence[float]) -> float:
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise DomainError("rmse needs two equal-length non-empty sequences")
    d = x - y
    return float(np.sqrt(np.mean(d * d)))


def resample(series: PriceSeries, n: int) -> PriceSeries:
    """Linear interpolation onto ``n`` evenly spaced times spanning the series."""
    if n < 2:
        raise DomainError("resample needs n >= 2")
    if len(series) < 2:
        raise DataError("cannot resample a single-point series")
    t = np.linspace(series.timestamps[0], series.timestamps[-1], n)
    return PriceSeries.from_arrays(t, np.interp(t, series.t, series.y), series.label)


def _dim_grid(lo: float, hi: float, step: float) -> tuple[float, ...]:
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(round(lo + i * step, 10) for i in range(count))


@dataclass(frozen=True)
class FitConfig:
    primes: tuple[int, ...] = (2, 3)
    levels: tuple[int, ...] = (1, 2, 3, 4, 5)
    dims: tuple[float, ...] = _dim_grid(0.2, 3.0, 0.05)
    dim_tol: float = 1e-3
    map_kinds: tuple[MapKind, ...] = (MapKind.DIGIT_POWER, MapKind.SCALE_POWER)
    slopes: tuple[int, ...] | None = None  # None: 1 .. p-1
    intercepts: tuple[int, ...] | None = None  # None: 0 .. p-1
    degrees: tuple[int, ...] = (1,)
    log_prices: bool = False

    def __post_init__(self) -> None:
        if not (self.primes and self.levels and self.dims and self.map_kinds and self.degrees):
            raise DomainError("fit grids must be non-empty")
        if min(self.dims) <= 0:
            raise DomainError("dimension grid must be positive")
        object.__setattr__(self, "dims", tuple(sorted(float(d) for d in self.dims)))
        object.__setattr__(self, "map_kinds", tuple(MapKind(k) for k in self.map_kinds))

    def slope_set(self, p: int) -> tuple[int, ...]:
        return tuple(self.slopes) if self.slopes is not None else tuple(range(1, p))

    def intercept_set(self, p: int) -> tuple[int, ...]:
        return tuple(self.intercepts) if self.intercepts is not None else tuple(range(p))

    @classmethod
    def from_dict(cls, d: dict) -> FitConfig:
        kw: dict = {}
        if "primes" in d:
            kw["primes"] = tuple(int(p) for p in d["primes"])
        if "levels" in d:
            kw["levels"] = tuple(int(v) for v in d["levels"])
        if "dims" in d:
            kw["dims"] = tuple(float(v) for v in d["dims"])
        elif "dim_min" in d:
            kw["dims"] = _dim_grid(float(d["dim_min"]), float(d["dim_max"]), float(d["dim_step"]))
        if "dim_tol" in d:
            kw["dim_tol"] = float(d["dim_tol"])
        if "map_kinds" in d:
            kw["map_kinds"] = tuple(MapKind(k) for k in d["map_kinds"])
        for key in ("slopes", "intercepts"):
            if d.get(key) is not None:
                kw[key] = tuple(int(v) for v in d[key])
        if "degrees" in d:
            kw["degrees"] = tuple(int(v) for v in d["degrees"])
        if "log_prices" in d:
            kw["log_prices"] = bool(d["log_prices"])
        return cls(**kw)


@dataclass(frozen=True)
class FitResult:
    """Best wave, its price transform and the per-candidate diagnostics.

    ``offset``/``scale`` are the fitted price transform.  They match
    ``spec.price_affine`` except for a flat series, where ``scale`` is 0 and
    ``spec`` keeps a unit scale placeholder (``degenerate`` is set).
    """

    spec: WaveSpec
    offset: float
    scale: float
    rmse: float
    diagnostics: tuple[dict, ...] = field(repr=False)
    resampling: dict = field(default_factory=dict)
    log_prices: bool = False
    degenerate: bool = False
    fingerprint: str | None = None
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "version": self.version,
            "spec": self.spec.to_dict(),
            "affine": {"offset": self.offset, "scale": self.scale},
            "rmse": self.rmse,
            "log_prices": self.log_prices,
            "degenerate": self.degenerate,
            "resampling": dict(self.resampling),
            "fingerprint": self.fingerprint,
            "diagnostics": [dict(d) for d in self.diagnostics],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> FitResult:
        if d.get("schema_version") != SCHEMA_VERSION:
            raise DataError(f"unsupported fit schema version {d.get('schema_version')!r}")
        try:
            return cls(
                spec=WaveSpec.from_dict(d["spec"]),
                offset=float(d["affine"]["offset"]),
                scale=float(d["affine"]["scale"]),
                rmse=float(d["rmse"]),
                diagnostics=tuple(d.get("diagnostics", ())),
                resampling=dict(d.get("resampling", {})),
                log_prices=bool(d.get("log_prices", False)),
                degenerate=bool(d.get("degenerate", False)),
                fingerprint=d.get("fingerprint"),
                version=str(d.get("version", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed fit result: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> FitResult:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"fit result is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)


def affine_fit(raw: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Least-squares ``target ~ y0 + s * raw`` for each row of ``raw``.

    Returns ``(y0, s, rmse)`` arrays.  Rows with no spread get ``s = 0``.
    """
    raw = np.atleast_2d(raw)
    rm = raw.mean(axis=1)
    tm = target.mean()
    rc = raw - rm[:, None]
    tc = target - tm
    var = np.einsum("ij,ij->i", rc, rc)
    cov = rc @ tc
    flat = var <= 1e-300
    s = np.where(flat, 0.0, cov / np.where(flat, 1.0, var))
    y0 = tm - s * rm
    resid = target[None, :] - (y0[:, None] + s[:, None] * raw)
    err = np.sqrt(np.mean(resid * resid, axis=1))
    return y0, s, err


_KIND_ORDER = {MapKind.DIGIT_POWER: 0, MapKind.SCALE_POWER: 1}


def _order_key(d: dict) -> tuple:
    return (d["rmse"], d["p"], d["level"], d["D"], d["C"], d["B"],
            _KIND_ORDER[MapKind(d["map_kind"])], d["degree"])


def interpolation_weights(times: np.ndarray, t0: float, t1: float, n: int):
    """Left indices and weights placing ``times`` on an ``n``-point uniform grid."""
    u = (np.asarray(times, dtype=float) - t0) * (n - 1) / (t1 - t0)
    left = np.clip(np.floor(u).astype(np.int64), 0, n - 2)
    frac = u - left
    return left, frac


def _on_data(raw: np.ndarray, left: np.ndarray, frac: np.ndarray) -> np.ndarray:
    return raw[:, left] * (1.0 - frac) + raw[:, left + 1] * frac


def _fit_candidate(target: np.ndarray, left: np.ndarray, frac: np.ndarray, p: int, level: int,
                   kind: MapKind, C: int, B: int, degree: int, cfg: FitConfig) -> dict:
    digits = digit_matrix(p, level, C, B, degree)

    def solve(dims):
        return affine_fit(_on_data(raw_matrix(digits, p, dims, kind), left, frac), target)

    dims = np.asarray(cfg.dims)
    y0s, scales, errs = solve(dims)
    i = int(np.argmin(errs))  # first minimum: lowest D among ties
    best = (float(errs[i]), float(dims[i]), float(y0s[i]), float(scales[i]))

    lo = dims[max(i - 1, 0)]
    hi = dims[min(i + 1, len(dims) - 1)]
    if hi > lo and best[0] > 0:
        res = minimize_scalar(lambda D: float(solve([D])[2][0]), bounds=(lo, hi),
                              method="bounded", options={"xatol": cfg.dim_tol})
        D = float(res.x)
        y0, s, err = solve([D])
        if float(err[0]) < best[0]:
            best = (float(err[0]), D, float(y0[0]), float(s[0]))

    err, D, y0, s = best
    return {"p": p, "level": level, "map_kind": kind.value, "C": C, "B": B, "degree": degree,
            "D": D, "rmse": err, "offset": y0, "scale": s}


def fit(series: PriceSeries, cfg: FitConfig | None = None, fingerprint: str | None = None) -> FitResult:
    """Exhaustive search for the wave best matching ``series`` in RMSE.

    Wave index ``k`` sits at time ``t0 + k * (t1 - t0) / (p**L - 1)`` over the
    series' window.  Each candidate is scored against the original samples,
    with the wave linearly interpolated onto the series' timestamps, so
    candidates of different sizes are compared on the same data.
    """
    cfg = cfg or FitConfig()
    series.require(4)
    t0, t1 = series.timestamps[0], series.timestamps[-1]
    target = np.log(series.y) if cfg.log_prices else series.y
    diagnostics = []
    for p in cfg.primes:
        for level in cfg.levels:
            left, frac = interpolation_weights(series.t, t0, t1, p**level)
            for kind in cfg.map_kinds:
                for C in cfg.slope_set(p):
                    for B in cfg.intercept_set(p):
                        for degree in cfg.degrees:
                            diagnostics.append(_fit_candidate(
                                target, left, frac, p, level, kind, C, B, degree, cfg))
    if not diagnostics:
        raise DomainError("no candidate waves in the fit grid")
    if not all(math.isfinite(d["rmse"]) for d in diagnostics):
        raise NumericalError("non-finite objective during fit")
    diagnostics.sort(key=_order_key)
    top = diagnostics[0]
    degenerate = top["scale"] == 0.0
    if degenerate:
        warnings.warn("flat price series: fitted wave has zero amplitude", RuntimeWarning, stacklevel=2)
    spec = WaveSpec(
        p=top["p"], D=top["D"], level=top["level"], C=top["C"], B=top["B"],
        map_kind=MapKind(top["map_kind"]), degree=top["degree"], time_window=(t0, t1),
        price_affine=(top["offset"], 1.0 if degenerate else top["scale"]),
    )
    return FitResult(
        spec=spec, offset=top["offset"], scale=top["scale"], rmse=top["rmse"],
        diagnostics=tuple(diagnostics),
        resampling={"input_points": len(series), "samples": spec.size, "t0": t0, "t1": t1},
        log_prices=cfg.log_prices, degenerate=degenerate, fingerprint=fingerprint,
    )


def _evaluate(result: FitResult, ks: Sequence[int]) -> np.ndarray:
    y = result.offset + result.scale * np.asarray(raw_values(result.spec, ks))
    return np.exp(y) if result.log_prices else y


def fitted_series(result: FitResult) -> PriceSeries:
    """The fitted wave on its own sample grid, in price units."""
    spec = result.spec
    ks = range(spec.size)
    t0 = spec.time_window[0]
    times = [t0 + spec.spacing * k for k in ks]
    return _to_series(times, _evaluate(result, ks), "fit")


def forecast(result: FitResult, horizon: int) -> PriceSeries:
    """Continue the fitted formula past the last sample.

    Indices ``k = p**L .. p**L + horizon - 1`` are evaluated with as many
    digits as ``k`` needs, so each forecast value depends on ``k`` alone and
    shorter horizons are prefixes of longer ones.
    """
    if not isinstance(horizon, int) or horizon < 1:
        raise DomainError("forecast horizon must be >= 1")
    spec = result.spec
    n = spec.size
    ks = range(n, n + horizon)
    t1 = spec.time_window[1]
    times = [t1 + spec.spacing * (k - (n - 1)) for k in ks]
    return _to_series(times, _evaluate(result, ks), "forecast")


def _to_series(times, values: np.ndarray, label: str) -> PriceSeries:
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise NumericalError(f"{label} produced non-positive or non-finite prices")
    return PriceSeries.from_arrays(times, values, label)
