"""Command-line interface.

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import adele, fit as fitmod, io, minority, padic
from .errors import DataError, DomainError, NumericalError
from .waves import MapKind, WaveSpec, wave_generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _rational(text: str) -> Fraction:
    try:
        return padic.parse_rational(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _prime_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated primes, got {text!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        io.atomic_write(out, text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adelic-market", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a p-adic wave as CSV (t,y)")
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--level", type=int, required=True)
    g.add_argument("--dim", type=float, required=True, help="fractal dimension D")
    g.add_argument("--c", type=int, default=1)
    g.add_argument("--b", type=int, default=0)
    g.add_argument("--degree", type=int, default=1, help="monomial degree m (1 = geodesic)")
    g.add_argument("--map", dest="map_kind", choices=[k.value for k in MapKind], default="digit-power")
    g.add_argument("--t0", type=float, default=0.0)
    g.add_argument("--t1", type=float, default=1.0)
    g.add_argument("--y0", type=float, default=0.0)
    g.add_argument("--yscale", type=float, default=1.0)
    g.add_argument("--out")
    g.add_argument("--svg")

    f = sub.add_parser("fit", help="fit a wave to a price CSV")
    f.add_argument("csv")
    f.add_argument("--column", default="close")
    f.add_argument("--config", help="JSON file with a fit grid (top level or under 'fit_grid')")
    f.add_argument("--log", action="store_true", help="fit log prices")
    f.add_argument("--out")
    f.add_argument("--svg")

    fc = sub.add_parser("forecast", help="extrapolate a fitted wave")
    fc.add_argument("fit_json")
    fc.add_argument("--horizon", type=int, required=True)
    fc.add_argument("--csv", dest="data_csv", help="original price CSV to overlay in --svg")
    fc.add_argument("--out")
    fc.add_argument("--svg")

    m = sub.add_parser("mg", help="run the minority game")
    m.add_argument("--n", type=int, required=True, help="number of agents")
    m.add_argument("--m", type=int, required=True, help="memory bits")
    m.add_argument("--s", type=int, default=2, help="strategies per agent")
    m.add_argument("--t", type=int, required=True, help="steps")
    m.add_argument("--seed", type=int, required=True)
    m.add_argument("--runs", type=int, default=1, help="independent runs (seeds seed..seed+runs-1)")
    m.add_argument("--exogenous", action="store_true", help="draw histories at random")
    m.add_argument("--p0", type=float, default=100.0)
    m.add_argument("--lam", type=float, default=minority.DEFAULT_LAMBDA)
    m.add_argument("--out", help="attendance/price CSV of the first run")
    m.add_argument("--summary", help="JSON sweep summary")
    m.add_argument("--svg")

    pa = sub.add_parser("padic", help="p-adic pretty-printers")
    psub = pa.add_subparsers(dest="action", required=True, parser_class=_Parser)
    e = psub.add_parser("expand")
    e.add_argument("--x", type=_rational, required=True)
    e.add_argument("--p", type=int, required=True)
    e.add_argument("--n", type=int, default=8)
    nm = psub.add_parser("norm")
    nm.add_argument("--x", type=_rational, required=True)
    nm.add_argument("--p", required=True, help="prime or 'inf'")
    va = psub.add_parser("valuation")
    va.add_argument("--x", type=_rational, required=True)
    va.add_argument("--p", type=int, required=True)

    ad = sub.add_parser("adele", help="adelic pretty-printers")
    asub = ad.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ch = asub.add_parser("char")
    ch.add_argument("--x", type=_rational, required=True)
    ch.add_argument("--primes", type=_prime_list, help="defaults to the support of x")
    pf = asub.add_parser("product")
    pf.add_argument("--x", type=_rational, required=True)
    ev = asub.add_parser("eval")
    ev.add_argument("--preset", required=True)
    ev.add_argument("--x", type=_rational, required=True)
    ev.add_argument("--config", help="presets JSON (bundled presets by default)")

    fx = sub.add_parser("fixtures", help="regenerate the synthetic data fixtures")
    fx.add_argument("--outdir", required=True)
    return parser


def _cmd_gen(a) -> int:
    spec = WaveSpec(p=a.p, D=a.dim, level=a.level, C=a.c, B=a.b, map_kind=MapKind(a.map_kind),
                    degree=a.degree, time_window=(a.t0, a.t1), price_affine=(a.y0, a.yscale))
    curve = wave_generate(spec)
    _emit(io.curve_csv(curve), a.out)
    if a.svg:
        label = f"p={spec.p} L={spec.level} D={spec.D:g} C={spec.C} B={spec.B} m={spec.degree}"
        io.render_svg(io.PlotSpec((io.Series2D(tuple(curve.points()), label),), title="p-adic wave"), a.svg)
    return EXIT_OK


def _load_fit_config(path: str | None, log: bool) -> fitmod.FitConfig:
    d: dict = {}
    if path:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read fit config {path}: {exc}") from exc
        d = dict(doc.get("fit_grid", doc))
    if log:
        d["log_prices"] = True
    return fitmod.FitConfig.from_dict(d)


def _cmd_fit(a) -> int:
    series = io.load_csv(a.csv, a.column)
    cfg = _load_fit_config(a.config, a.log)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = fitmod.fit(series, cfg, fingerprint=io.fingerprint(a.csv))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _emit(result.to_json(), a.out)
    if a.svg:
        fitted = fitmod.fitted_series(result)
        plot = io.PlotSpec((io.Series2D(io.series_points(series), "data"),
                            io.Series2D(io.series_points(fitted), "p-adic fit")),
                           title=f"fit rmse={result.rmse:.6g}")
        io.render_svg(plot, a.svg)
    return EXIT_OK


def _cmd_forecast(a) -> int:
    try:
        text = Path(a.fit_json).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {a.fit_json}: {exc}") from exc
    result = fitmod.FitResult.from_json(text)
    if a.horizon < 1:
        raise UsageError("forecast: --horizon must be >= 1")
    fitted = fitmod.fitted_series(result)
    ahead = fitmod.forecast(result, a.horizon)
    rows = [(io.format_timestamp(t), io.fmt(v), 0) for t, v in io.series_points(fitted)]
    rows += [(io.format_timestamp(t), io.fmt(v), 1) for t, v in io.series_points(ahead)]
    _emit(io.table_csv(("timestamp", "value", "is_forecast"), rows), a.out)
    if a.svg:
        series = []
        if a.data_csv:
            series.append(io.Series2D(io.series_points(io.load_csv(a.data_csv)), "data"))
        series.append(io.Series2D(io.series_points(fitted), "p-adic fit"))
        series.append(io.Series2D(io.series_points(ahead), "forecast", style="dashed"))
        io.render_svg(io.PlotSpec(tuple(series), title=f"forecast h={a.horizon}"), a.svg)
    return EXIT_OK


def _cmd_mg(a) -> int:
    history = minority.EXOGENOUS if a.exogenous else minority.ENDOGENOUS
    if a.runs < 1:
        raise UsageError("mg: --runs must be >= 1")
    configs = [minority.MGConfig(a.n, a.m, a.s, a.t, a.seed + r, history) for r in range(a.runs)]
    state = minority.mg_run(configs[0])
    prices = minority.price_from_attendance(state.attendance, a.p0, a.lam)
    rows = [(t + 1, A, p) for t, (A, p) in enumerate(zip(state.attendance, prices.values))]
    _emit(io.table_csv(("t", "A", "price"), rows), a.out)
    if a.summary:
        summary = {"history": history, "lambda": a.lam, "runs": minority.sweep(configs)}
        io.atomic_write(a.summary, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if a.svg:
        pts = tuple((float(t), float(p)) for t, _, p in rows)
        io.render_svg(io.PlotSpec((io.Series2D(pts, "price"),), title="minority game"), a.svg)
    return EXIT_OK


def _cmd_padic(a) -> int:
    if a.action == "expand":
        print(padic.expand(a.x, a.p, a.n))
    elif a.action == "norm":
        print(padic.padic_norm(a.x, padic.Place.parse(a.p)))
    else:
        print(padic.valuation(a.x, a.p))
    return EXIT_OK


def _fmt_complex(z: complex) -> str:
    re = 0.0 if abs(z.real) < 5e-13 else z.real
    im = 0.0 if abs(z.imag) < 5e-13 else z.imag
    return f"{re:.12g}{im:+.12g}j"


def _cmd_adele(a) -> int:
    if a.action == "char":
        primes = a.primes if a.primes is not None else padic.support(a.x)
        print(f"inf: {_fmt_complex(adele.chi_inf(a.x))}")
        for p in sorted(set(primes)):
            print(f"{p}: {_fmt_complex(adele.chi_p(a.x, p))}")
        print(f"product: {_fmt_complex(adele.adele_char(a.x, primes))}")
    elif a.action == "product":
        rows, total = padic.product_formula(a.x)
        for place, norm in rows:
            print(f"{place}: {norm}")
        print(f"product: {total}")
    else:
        presets = adele.load_presets(a.config)
        if a.preset not in presets:
            raise DataError(f"unknown preset {a.preset!r}; have {', '.join(sorted(presets))}")
        f = presets[a.preset]
        print(_fmt_complex(adele.eval_test_function(f, adele.embed_rational(a.x, f.finite_factors))))
    return EXIT_OK


def _cmd_fixtures(a) -> int:
    for path in io.write_fixtures(a.outdir):
        print(path)
    return EXIT_OK


COMMANDS = {
    "gen": _cmd_gen,
    "fit": _cmd_fit,
    "forecast": _cmd_forecast,
    "mg": _cmd_mg,
    "padic": _cmd_padic,
    "adele": _cmd_adele,
    "fixtures": _cmd_fixtures,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
