"""CSV, SVG and fixture I/O.

Every writer goes through :func:`atomic_write` so a failed command never
leaves a partial file behind.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import DataError, DomainError
from .minority import MGConfig, mg_run, price_from_attendance
from .series import PriceSeries
from .waves import WaveCurve, WaveSpec, wave_generate

PRICE_HEADER = ("timestamp", "open", "high", "low", "close", "volume")
PRICE_COLUMNS = ("open", "high", "low", "close", "volume")


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fingerprint(path: str | os.PathLike) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def fmt(x: float) -> str:
    """Shortest round-trip text for a float."""
    return repr(float(x))


# --- price CSV ---------------------------------------------------------------


def parse_timestamp(text: str) -> float:
    """Epoch seconds from an epoch number or an ISO-8601 string (naive = UTC)."""
    s = text.strip()
    try:
        value = float(s)
    except ValueError:
        pass
    else:
        if math.isfinite(value):
            return value
        raise ValueError(f"non-finite timestamp {text!r}")
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def format_timestamp(t: float) -> str:
    return datetime.fromtimestamp(t, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def read_price_rows(text: str) -> list[dict]:
    """Validate price CSV text; one dict per data row with parsed fields."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("row 1: missing header") from None
    header = [h.strip() for h in header]
    if tuple(header) != PRICE_HEADER:
        for i, (got, want) in enumerate(zip(header, PRICE_HEADER), start=1):
            if got != want:
                raise DataError(f"row 1: header cell {i} is {got!r}, expected {want!r}")
        raise DataError(f"row 1: header must be {','.join(PRICE_HEADER)!r}")
    rows = []
    prev = None
    for rowno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(PRICE_HEADER):
            raise DataError(f"row {rowno}: expected {len(PRICE_HEADER)} fields, got {len(row)}")
        try:
            ts = parse_timestamp(row[0])
        except ValueError:
            raise DataError(f"row {rowno}: bad timestamp {row[0]!r}") from None
        if prev is not None and not ts > prev:
            raise DataError(f"row {rowno}: timestamp not strictly increasing")
        prev = ts
        rec = {"timestamp": ts}
        for name, cell in zip(PRICE_COLUMNS, row[1:]):
            cell = cell.strip()
            if name == "volume" and cell == "":
                rec[name] = None
                continue
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"row {rowno}: non-numeric {name} {cell!r}") from None
            if not math.isfinite(value):
                raise DataError(f"row {rowno}: non-finite {name} {cell!r}")
            rec[name] = value
        rows.append(rec)
    return rows


def load_csv(path: str | os.PathLike, column: str = "close") -> PriceSeries:
    if column not in PRICE_COLUMNS or column == "volume":
        raise DataError(f"unknown price column {column!r}")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = read_price_rows(text)
    for rowno, rec in enumerate(rows, start=2):
        if not rec[column] > 0:
            raise DataError(f"row {rowno}: {column} must be positive")
    series = PriceSeries(tuple(r["timestamp"] for r in rows), tuple(r[column] for r in rows), column)
    return series.require(4)


def price_csv(rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PRICE_HEADER)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def table_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def curve_csv(curve: WaveCurve) -> str:
    return table_csv(("t", "y"), curve.points())


def lattice_csv(psi) -> str:
    return table_csv(("coset", "re", "im"),
                     ((str(psi.label(j)), float(v.real), float(v.imag)) for j, v in enumerate(psi.values)))


# --- SVG ---------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


@dataclass(frozen=True)
class Series2D:
    points: tuple[tuple[float, float], ...]
    label: str = ""
    style: str = "solid"  # solid | dashed
    color: str | None = None


@dataclass(frozen=True)
class PlotSpec:
    series: tuple[Series2D, ...]
    width: int = 800
    height: int = 400
    title: str = ""
    x_range: tuple[float, float] | None = None
    y_range: tuple[float, float] | None = None
    margin: int = field(default=48, repr=False)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise DomainError("plot dimensions must be positive")
        if not self.series:
            raise DomainError("plot needs at least one series")


def _range(values: list[float], fixed) -> tuple[float, float]:
    if fixed is not None:
        return float(fixed[0]), float(fixed[1])
    lo, hi = min(values), max(values)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def svg_text(plot: PlotSpec) -> str:
    xs = [x for s in plot.series for x, _ in s.points]
    ys = [y for s in plot.series for _, y in s.points]
    if not xs:
        raise DomainError("plot series are empty")
    x0, x1 = _range(xs, plot.x_range)
    y0, y1 = _range(ys, plot.y_range)
    m = plot.margin
    w, h = plot.width - 2 * m, plot.height - 2 * m

    def sx(x: float) -> str:
        return f"{m + (x - x0) / (x1 - x0) * w:.2f}"

    def sy(y: float) -> str:
        return f"{m + h - (y - y0) / (y1 - y0) * h:.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{plot.width}" height="{plot.height}" '
        f'viewBox="0 0 {plot.width} {plot.height}">',
        f'<rect x="0" y="0" width="{plot.width}" height="{plot.height}" fill="white"/>',
        f'<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="#888888" stroke-width="1"/>',
    ]
    if plot.title:
        out.append(f'<text x="{plot.width / 2:.2f}" y="{m / 2:.2f}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{escape(plot.title)}</text>')
    out.append(f'<text x="{m}" y="{plot.height - m / 4:.2f}" font-family="sans-serif" '
               f'font-size="10">x: {x0:.6g} .. {x1:.6g}   y: {y0:.6g} .. {y1:.6g}</text>')
    for i, s in enumerate(plot.series):
        color = s.color or PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="6 3"' if s.style == "dashed" else ""
        pts = " ".join(f"{sx(x)},{sy(y)}" for x, y in s.points)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>')
        if s.label:
            ly = m + 14 + 14 * i
            out.append(f'<line x1="{m + 8}" y1="{ly - 4}" x2="{m + 28}" y2="{ly - 4}" '
                       f'stroke="{color}" stroke-width="1.5"{dash}/>')
            out.append(f'<text x="{m + 32}" y="{ly}" font-family="sans-serif" '
                       f'font-size="11">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(plot: PlotSpec, path: str | os.PathLike) -> None:
    atomic_write(path, svg_text(plot))


def series_points(series: PriceSeries) -> tuple[tuple[float, float], ...]:
    return tuple(zip(series.timestamps, series.values))


# --- fixtures ----------------------------------------------------------------

FIXTURE_START = 1243814400.0  # 2009-06-01T00:00:00Z
DAY = 86400.0
MARKET_FIXTURE = MGConfig(N=51, M=5, S=2, T=256, seed=20090601)
MARKET_P0 = 150.0
NOISELESS_SPEC = WaveSpec(p=3, D=1.6, level=3, C=1, B=0,
                          time_window=(FIXTURE_START, FIXTURE_START + 26 * DAY),
                          price_affine=(100.0, 20.0))


def market_fixture_csv() -> str:
    """Synthetic OHLCV file driven by a seeded minority game."""
    state = mg_run(MARKET_FIXTURE)
    closes = price_from_attendance(state.attendance, MARKET_P0).values
    rows = []
    prev = MARKET_P0
    for i, (A, close) in enumerate(zip(state.attendance, closes)):
        high, low = max(prev, close), min(prev, close)
        minority = int(round((MARKET_FIXTURE.N - abs(A) * math.sqrt(MARKET_FIXTURE.N)) / 2))
        rows.append((format_timestamp(FIXTURE_START + i * DAY), f"{prev:.6f}", f"{high:.6f}",
                     f"{low:.6f}", f"{close:.6f}", minority * 100))
        prev = close
    return price_csv(rows)


def wave_fixture_csv(spec: WaveSpec = NOISELESS_SPEC) -> str:
    curve = wave_generate(spec)
    rows = []
    for t, y in curve.points():
        rows.append((format_timestamp(t), fmt(y), fmt(y), fmt(y), fmt(y), ""))
    return price_csv(rows)


FIXTURES = {
    "gazprom_synthetic.csv": market_fixture_csv,
    "wave_noiseless.csv": wave_fixture_csv,
}


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("adelic_market").joinpath("data", name)))


def write_fixtures(outdir: str | os.PathLike) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, make in FIXTURES.items():
        atomic_write(outdir / name, make())
        written.append(outdir / name)
    return written


def noisy_copy(series: PriceSeries, rel_sigma: float, seed: int) -> tuple[PriceSeries, float]:
    """Series plus Gaussian noise of ``rel_sigma`` times its value range."""
    y = series.y
    sigma = rel_sigma * float(y.max() - y.min())
    rng = np.random.default_rng(seed)
    return PriceSeries.from_arrays(series.t, y + rng.normal(0.0, sigma, y.size), series.label), sigma
