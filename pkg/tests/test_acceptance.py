"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
happen; they are also repeated in the terminal summary.
"""

from __future__ import annotations

import cmath
import contextlib
import itertools
import math
import random
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from adelic_market.adele import (
    LatticeFunction,
    PhasePoint,
    adele_char,
    composition_phase,
    weyl_apply,
)
from adelic_market.cli import run_cli
from adelic_market.fit import fit, forecast
from adelic_market.io import NOISELESS_SPEC, fixture_path, load_csv, noisy_copy
from adelic_market.minority import (
    EXOGENOUS,
    MGConfig,
    decompose_tables,
    quadratic_form,
    sweep,
)
from adelic_market.padic import expand, padic_norm, product_formula, support
from adelic_market.series import PriceSeries
from adelic_market.waves import MapKind, WaveSpec, real_map, slope_changes, wave_generate, wave_values

GOLDEN = Path(__file__).resolve().parent / "golden"


@contextlib.contextmanager
def criterion(log: list, number: int, title: str, limit: float | None = None):
    """Time the block, enforce ``limit`` seconds and record PASS/FAIL."""
    detail: dict = {}
    start = time.perf_counter()
    try:
        yield detail
        elapsed = time.perf_counter() - start
        if limit is not None:
            assert elapsed < limit, f"took {elapsed:.2f}s, limit {limit}s"
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        line = f"criterion {number}: FAIL  {title} ({elapsed:.2f}s) {type(exc).__name__}: {exc}"
        log.append(line)
        print("\n" + line)
        raise
    note = detail.get("note", "")
    line = f"criterion {number}: PASS  {title} ({elapsed:.2f}s){'  ' + note if note else ''}"
    log.append(line)
    print("\n" + line)


def fuzz_rational(rng: random.Random, primes=(2, 3, 5, 7), nonzero: bool = False) -> Fraction:
    """Rational with a heavy share of prime powers so valuations vary widely."""
    while True:
        num = rng.randint(-10**9, 10**9) * math.prod(rng.choice(primes) for _ in range(rng.randint(0, 6)))
        den = rng.randint(1, 10**6) * math.prod(rng.choice(primes) for _ in range(rng.randint(0, 6)))
        if num or not nonzero:
            return Fraction(num, den)


def multiplicity(n: int, p: int) -> int:
    n, k = abs(n), 0
    while n % p == 0:
        n, k = n // p, k + 1
    return k


# --- p-adic core ---------------------------------------------------------------


def test_1_ultrametricity(acceptance_log):
    with criterion(acceptance_log, 1, "exact ultrametric inequality, 10^4 pairs per p in {2,3,5}", 5.0) as d:
        rng = random.Random(1)
        violations = 0
        for p in (2, 3, 5):
            for _ in range(10**4):
                x, y = fuzz_rational(rng), fuzz_rational(rng)
                nx, ny, nxy = padic_norm(x, p), padic_norm(y, p), padic_norm(x + y, p)
                if nxy > max(nx, ny) or (nx != ny and nxy != max(nx, ny)):
                    violations += 1
        d["note"] = f"violations={violations}"
        assert violations == 0


def test_2_product_formula(acceptance_log):
    with criterion(acceptance_log, 2, "product formula on 10^3 nonzero rationals", 5.0) as d:
        rng = random.Random(2)
        violations = 0
        for _ in range(10**3):
            x = fuzz_rational(rng, primes=(2, 3, 5, 7, 11, 13, 97), nonzero=True)
            rows, total = product_formula(x)
            # independent oracle: |x|_inf times p^-(v_p) over every prime factor
            oracle = abs(x)
            for p in support(x):
                oracle *= Fraction(p) ** (multiplicity(x.denominator, p) - multiplicity(x.numerator, p))
            if total != 1 or oracle != 1 or math.prod(n for _, n in rows) != 1:
                violations += 1
        d["note"] = f"violations={violations}"
        assert violations == 0


def test_3_expansion_round_trip(acceptance_log):
    with criterion(acceptance_log, 3, "expansion congruent mod p^(v+N), 10^3 cases, N in [1,32]", 10.0) as d:
        rng = random.Random(3)
        bad = 0
        for _ in range(10**3):
            x = fuzz_rational(rng, nonzero=True)
            p = rng.choice((2, 3, 5, 7))
            n = rng.randint(1, 32)
            e = expand(x, p, n)
            rec = sum(Fraction(a) * Fraction(p) ** (e.v + i) for i, a in enumerate(e.digits))
            diff = x - rec
            # diff must be divisible by p^(v+N) in Z_(p)
            ok = (len(e.digits) == n and e.digits[0] != 0 and all(0 <= a < p for a in e.digits)
                  and (diff == 0
                       or multiplicity(diff.numerator, p) - multiplicity(diff.denominator, p) >= e.v + n))
            bad += not ok
        d["note"] = f"failures={bad}"
        assert bad == 0


# --- fractal waves ---------------------------------------------------------------


def test_4_self_affinity(acceptance_log):
    with criterion(acceptance_log, 4, "real_map(a+p*j) = (a^D + real_map(j))/p, 10^4 cases", 5.0) as d:
        rng = random.Random(4)
        worst = 0.0
        for _ in range(10**4):
            p = rng.choice((2, 3, 5, 7))
            a = rng.randrange(p)
            j = rng.randrange(p**12)
            D = rng.uniform(0.2, 3.0)
            # 16 digits cover every integer below p^13 exactly
            lhs = real_map(expand(a + p * j, p, 16), D)
            rhs = ((a**D if a else 0.0) + real_map(expand(j, p, 16), D)) / p
            worst = max(worst, abs(lhs - rhs))
        d["note"] = f"max |err|={worst:.2e}"
        assert worst <= 1e-12


def breakpoint_oracle(p: int, level: int, D: float) -> int:
    """Vertices of one closed period, computed straight from the digit formula."""
    n = p**level
    ys = []
    for k in range(n + 1):
        w = k % n
        ys.append(sum((w // p**i % p) ** D / p ** (i + 1) for i in range(level) if w // p**i % p))
    slopes = [b - a for a, b in zip(ys, ys[1:])]
    return sum(1 for s0, s1 in zip(slopes, slopes[1:]) if not math.isclose(s0, s1, rel_tol=1e-9, abs_tol=1e-12))


def test_5_elliott_breakpoints(acceptance_log):
    with criterion(acceptance_log, 5, "p=3 L=2 linear wave has 8 slope changes", None) as d:
        counts = {}
        for D in (0.45, 1.6, 2.0):
            spec = WaveSpec(p=3, D=D, level=2)
            counts[D] = (slope_changes(wave_generate(spec).y), breakpoint_oracle(3, 2, D))
        d["note"] = "counts " + ", ".join(f"D={D}: {c[0]}" for D, c in counts.items())
        assert all(c == (8, 8) for c in counts.values()), counts


def test_6_bubble_golden(acceptance_log, tmp_path, capsys):
    with criterion(acceptance_log, 6, "bubble gen (p=3 L=3 m=3 D=0.45) byte-identical to golden", None):
        argv = ["gen", "--p", "3", "--level", "3", "--dim", "0.45", "--degree", "3"]
        outs = []
        for i in range(2):
            path = tmp_path / f"bubble{i}.csv"
            assert run_cli(argv + ["--out", str(path)]) == 0
            outs.append(path.read_bytes())
        capsys.readouterr()
        assert outs[0] == outs[1]
        assert outs[0] == (GOLDEN / "bubble.csv").read_bytes()


# --- adelic analysis -------------------------------------------------------------


def test_7_adelic_triviality(acceptance_log):
    with criterion(acceptance_log, 7, "adele_char(x, support) = 1 on 10^3 rationals over {2,3,5,7}", 5.0) as d:
        rng = random.Random(7)
        worst = 0.0
        for _ in range(10**3):
            num = rng.randint(-10**6, 10**6)
            den = 2 ** rng.randint(0, 12) * 3 ** rng.randint(0, 8) * 5 ** rng.randint(0, 6) * 7 ** rng.randint(0, 5)
            x = Fraction(num, den)
            worst = max(worst, abs(adele_char(x, support(x)) - 1), abs(adele_char(x, [2, 3, 5, 7]) - 1))
        d["note"] = f"max |chi-1|={worst:.2e}"
        assert worst <= 1e-12


def frac_digits(x: Fraction, p: int) -> Fraction:
    """{x}_p from the digit expansion."""
    if x == 0:
        return Fraction(0)
    e = expand(x, p, 40)
    return sum((Fraction(a) * Fraction(p) ** (e.v + i) for i, a in enumerate(e.digits) if e.v + i < 0),
               Fraction(0))


def kernel_matrix(z: PhasePoint, p: int, N: int) -> np.ndarray:
    """Dense oracle: M[x, y] = chi_p(k(2x+q)) when y = x + q mod p^N Z_p."""
    n = p ** (2 * N)
    labels = [Fraction(j, p**N) for j in range(n)]
    M = np.zeros((n, n), dtype=complex)
    for i, x in enumerate(labels):
        target = x + z.q
        for j, y in enumerate(labels):
            diff = target - y
            if diff == 0 or multiplicity(diff.numerator, p) - multiplicity(diff.denominator, p) >= N:
                M[i, j] = cmath.exp(2j * math.pi * float(frac_digits(z.k * (2 * x + z.q), p)))
                break
    return M


def window_point(rng: random.Random, p: int, N: int) -> Fraction:
    unit = rng.choice([u for u in (1, 5, 7, 11) if u % p])
    return Fraction(rng.randint(-200, 200), p ** rng.randint(0, N) * unit)


def test_8_weyl_representation(acceptance_log):
    with criterion(acceptance_log, 8, "Weyl unitarity 1e-12 and composition phase 1e-10, p in {2,3}, N in {1,2}",
                   10.0) as d:
        rng = random.Random(8)
        nrng = np.random.default_rng(8)
        worst_u = worst_c = worst_k = 0.0
        for p, N in itertools.product((2, 3), (1, 2)):
            n = p ** (2 * N)
            trials = 12 if n > 20 else 20
            for _ in range(trials):
                z1 = PhasePoint(window_point(rng, p, N), window_point(rng, p, N))
                z2 = PhasePoint(window_point(rng, p, N), window_point(rng, p, N))
                M1, M2, M12 = (kernel_matrix(z, p, N) for z in (z1, z2, z1 + z2))
                worst_u = max(worst_u, np.max(np.abs(M1.conj().T @ M1 - np.eye(n))))
                c = composition_phase(z1, z2, p)
                worst_c = max(worst_c, np.max(np.abs(M1 @ M2 - c * M12)))
                psi = LatticeFunction(p, N, nrng.normal(size=n) + 1j * nrng.normal(size=n))
                w1 = weyl_apply(z1, psi)
                worst_k = max(worst_k, np.max(np.abs(w1.values - M1 @ psi.values)))
                worst_u = max(worst_u, abs(w1.norm() - psi.norm()))
                lhs = weyl_apply(z1, weyl_apply(z2, psi)).values
                worst_c = max(worst_c, np.max(np.abs(lhs - c * weyl_apply(z1 + z2, psi).values)))
        d["note"] = f"unitarity={worst_u:.1e} phase={worst_c:.1e} vs-oracle={worst_k:.1e}"
        assert worst_u <= 1e-12 and worst_k <= 1e-12
        assert worst_c <= 1e-10


# --- minority game ---------------------------------------------------------------


def all_tables(N: int, K: int, start: int, stop: int) -> np.ndarray:
    """Tables ``start..stop-1`` in binary order, shape (count, N, 2, K), entries +-1."""
    bits = N * 2 * K
    idx = np.arange(start, stop, dtype=np.int64)
    b = (idx[:, None] >> np.arange(bits, dtype=np.int64)) & 1
    return (2 * b - 1).astype(np.int8).reshape(-1, N, 2, K)


def test_9_minority_game_identity(acceptance_log):
    with criterion(acceptance_log, 9, "spin-glass identity, exhaustive N<=3, M<=2, every spin assignment",
                   60.0) as d:
        worst = 0.0
        mean_c = {}
        cases = 0
        chunk = 1 << 14
        for N, M in itertools.product((1, 2, 3), (1, 2)):
            K = 2**M
            total = 1 << (N * 2 * K)
            spins = np.array(list(itertools.product((1, -1), repeat=N)), dtype=np.int8)
            # row a of select picks strategy 0 of agent i when spin i is +1, else strategy 1
            select = np.zeros((len(spins), N * 2))
            for a, spin in enumerate(spins):
                select[a, 2 * np.arange(N) + (1 - spin) // 2] = 1.0
            c_sum = 0.0
            for start in range(0, total, chunk):
                tables = all_tables(N, K, start, min(start + chunk, total))
                _, _, const, h, J = decompose_tables(tables)
                c_sum += float(const.sum())
                attendance = select @ tables.reshape(len(tables), N * 2, K).astype(float)
                lhs = (attendance**2).mean(axis=-1) / N
                rhs = quadratic_form(const, h, J, spins[:, None, :]).T
                worst = max(worst, float(np.max(np.abs(lhs - rhs))))
                cases += lhs.size
            mean_c[(N, M)] = c_sum / total
        d["note"] = (f"cases={cases} max |lhs-rhs|={worst:.1e}; table-averaged constant "
                     + ",".join(f"{v:g}" for v in mean_c.values()))
        assert worst <= 1e-12
        assert all(abs(v - 0.5) <= 1e-12 for v in mean_c.values()), mean_c


def test_10_random_regime_volatility(acceptance_log):
    with criterion(acceptance_log, 10, "N=11 M=8 S=2 T=10^4, 20 seeds: mean sigma^2/N within 10% of 1",
                   60.0) as d:
        configs = [MGConfig(N=11, M=8, S=2, T=10**4, seed=s, history=EXOGENOUS) for s in range(20)]
        values = [r["sigma2_over_N"] for r in sweep(configs)]
        mean = float(np.mean(values))
        d["note"] = f"mean={mean:.4f} (exogenous histories) range=[{min(values):.3f}, {max(values):.3f}]"
        assert abs(mean - 1.0) <= 0.1


# --- market fit --------------------------------------------------------------------


def test_11_fit_round_trip(acceptance_log):
    with criterion(acceptance_log, 11, "fit recovers p=3 L=3 D=1.6 noiseless (rmse<1e-10) and with 1% noise",
                   60.0) as d:
        curve = wave_generate(NOISELESS_SPEC)
        clean = PriceSeries.from_arrays(curve.t, curve.y)
        exact = fit(clean)
        got, want = exact.spec, NOISELESS_SPEC
        assert (got.p, got.level, got.D, got.C, got.B, got.map_kind, got.degree, got.time_window) == (
            want.p, want.level, want.D, want.C, want.B, want.map_kind, want.degree, want.time_window)
        assert np.allclose(got.price_affine, want.price_affine, rtol=1e-12)
        assert exact.rmse < 1e-10
        dims = []
        for seed in range(5):
            noisy, _ = noisy_copy(clean, 0.01, seed)
            got = fit(noisy).spec
            assert (got.p, got.level) == (3, 3), (seed, got)
            assert abs(got.D - 1.6) <= 0.05, (seed, got.D)
            dims.append(got.D)
        d["note"] = f"noiseless rmse={exact.rmse:.1e}; noisy D=" + ",".join(f"{x:.3f}" for x in dims)


def direct_wave(spec: WaveSpec, k: int) -> float:
    width = spec.level
    while spec.p**width <= k:
        width += 1
    w = (spec.C * k**spec.degree + spec.B) % spec.p**width
    raw = sum((w // spec.p**i % spec.p) ** spec.D / spec.p ** (i + 1) for i in range(width) if w // spec.p**i % spec.p)
    return spec.price_affine[0] + spec.price_affine[1] * raw


def test_12_forecast_exactness(acceptance_log):
    with criterion(acceptance_log, 12, "10-step forecast equals the continued generator within 1e-12", 5.0) as d:
        result = fit(load_csv(fixture_path("wave_noiseless.csv")))
        ahead = forecast(result, 10).values
        n = NOISELESS_SPEC.size
        continued = wave_values(NOISELESS_SPEC, range(n, n + 10))
        direct = [direct_wave(NOISELESS_SPEC, k) for k in range(n, n + 10)]
        err = max(max(abs(a - b), abs(a - c)) for a, b, c in zip(ahead, continued, direct))
        d["note"] = f"max |err|={err:.1e}"
        assert err <= 1e-12
