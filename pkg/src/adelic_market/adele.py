"""Adeles of Q: additive and multiplicative characters, product-form
Bruhat-Schwartz test functions and the p-adic Weyl operator on a finite
quotient of Q_p.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import DomainError
from .padic import RationalLike, as_rational, check_prime, padic_norm, support, valuation

TWO_PI = 2.0 * math.pi


def frac_part(x: RationalLike, p: int) -> Fraction:
    """p-adic fractional part ``{x}_p``: the negative-power tail of the expansion.

    Lies in [0, 1) with a power of ``p`` as denominator; it is 0 exactly
    when ``|x|_p <= 1``.
    """
    check_prime(p)
    x = as_rational(x)
    if x == 0:
        return Fraction(0)
    v = valuation(x, p)
    if v >= 0:
        return Fraction(0)
    pk = p ** (-v)
    # x = a / (pk * b) with p not dividing b
    b = x.denominator // pk
    c = x.numerator * pow(b, -1, pk) % pk
    return Fraction(c, pk)


def _unit_phase(t: Fraction | float) -> complex:
    """``exp(2*pi*i*t)``, reducing ``t`` modulo 1 first."""
    if isinstance(t, Fraction):
        t = t - math.floor(t)
        if t == 0:
            return complex(1.0, 0.0)
        if t == Fraction(1, 2):
            return complex(-1.0, 0.0)
    else:
        t = t - math.floor(t)
    return cmath.exp(1j * TWO_PI * float(t))


def chi_p(x: RationalLike, p: int) -> complex:
    """Additive character ``exp(+2*pi*i*{x}_p)`` at the prime ``p``."""
    return _unit_phase(frac_part(x, p))


def chi_inf(x: Union[RationalLike, float]) -> complex:
    """Additive character ``exp(-2*pi*i*x)`` at the real place."""
    if isinstance(x, float):
        return _unit_phase(-x)
    return _unit_phase(-as_rational(x))


def adele_char(x: RationalLike, primes: Iterable[int]) -> complex:
    """Product of the real character and ``chi_p`` over ``primes``.

    ``primes`` must contain every prime dividing the denominator of ``x``;
    at any other prime the factor is 1.
    """
    x = as_rational(x)
    ps = sorted(set(primes))
    for p in ps:
        check_prime(p)
    missing = [q for q in support(x.denominator) if q not in ps]
    if missing:
        raise DomainError(f"support primes incomplete: missing {missing}")
    value = chi_inf(x)
    for p in ps:
        value *= chi_p(x, p)
    return value


@dataclass(frozen=True)
class AdelePoint:
    """Adele with finitely many listed components.

    Every unlisted prime is understood to carry a component in Z_p.
    """

    real: float | Fraction
    finite: Mapping[int, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        comps = {}
        for p, x in self.finite.items():
            comps[check_prime(int(p))] = as_rational(x)
        object.__setattr__(self, "finite", dict(sorted(comps.items())))

    def component(self, p: int) -> Fraction | None:
        return self.finite.get(p)


def embed_rational(x: RationalLike, primes: Iterable[int] = ()) -> AdelePoint:
    """Diagonal embedding of ``x``, listing its support plus any extra ``primes``."""
    x = as_rational(x)
    ps = set(support(x)) | {check_prime(int(p)) for p in primes}
    return AdelePoint(x, {p: x for p in sorted(ps)})


def mult_char(a: AdelePoint, s: float) -> float:
    """``|a_inf|**s * prod(|a_p|_p**s)`` over the listed primes."""
    if a.real == 0:
        raise DomainError("multiplicative character needs a nonzero real component")
    norm = Fraction(abs(a.real)) if isinstance(a.real, Fraction) else abs(a.real)
    finite = Fraction(1)
    for p, x in a.finite.items():
        if x == 0:
            raise DomainError(f"zero component at p={p}")
        finite *= padic_norm(x, p)
    if isinstance(norm, Fraction):
        return float(norm * finite) ** float(s)
    return norm ** float(s) * float(finite) ** float(s)


def omega(x: RationalLike, p: int) -> float:
    """Indicator of the unit ball ``|x|_p <= 1``."""
    return 1.0 if padic_norm(x, check_prime(p)) <= 1 else 0.0


# --- Test-function factors -------------------------------------------------


@dataclass(frozen=True)
class Gaussian:
    center: float = 0.0
    sigma: float = 1.0

    def __call__(self, x: float) -> float:
        z = (float(x) - self.center) / self.sigma
        return math.exp(-0.5 * z * z)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __call__(self, x: float) -> float:
        return 1.0 if self.lo <= float(x) <= self.hi else 0.0


@dataclass(frozen=True)
class Omega:
    def __call__(self, x: Fraction, p: int) -> complex:
        return complex(omega(x, p))


@dataclass(frozen=True)
class Ball:
    """Indicator of ``|x - center|_p <= p**-radius``."""

    center: Fraction = Fraction(0)
    radius: int = 0

    def __call__(self, x: Fraction, p: int) -> complex:
        return complex(padic_norm(as_rational(x) - self.center, p) <= Fraction(p) ** -self.radius)


@dataclass(frozen=True)
class CharOmega:
    """``chi_p(freq * x) * Omega(|x|_p)``."""

    freq: Fraction = Fraction(1)

    def __call__(self, x: Fraction, p: int) -> complex:
        if not omega(x, p):
            return 0j
        return chi_p(self.freq * as_rational(x), p)


RealFactor = Union[Gaussian, Interval]
FiniteFactor = Union[Omega, Ball, CharOmega]


@dataclass(frozen=True)
class TestFunction:
    """Product ``phi_inf(x_inf) * prod(phi_p(x_p))``; unlisted primes use Omega."""

    __test__ = False  # not a pytest class

    real_factor: RealFactor = Gaussian()
    finite_factors: Mapping[int, FiniteFactor] = field(default_factory=dict)

    def __post_init__(self) -> None:
        fs = {check_prime(int(p)): f for p, f in self.finite_factors.items()}
        object.__setattr__(self, "finite_factors", dict(sorted(fs.items())))


def eval_test_function(f: TestFunction, a: AdelePoint) -> complex:
    value = complex(f.real_factor(a.real))
    for p, factor in f.finite_factors.items():
        x = a.component(p)
        if x is None:
            if isinstance(factor, Omega):
                continue  # unlisted components lie in Z_p
            raise DomainError(f"adele has no component at p={p} for a non-Omega factor")
        value *= factor(x, p)
    # listed components at primes without an explicit factor meet Omega
    for p, x in a.finite.items():
        if p not in f.finite_factors:
            value *= omega(x, p)
    return value


def _factor_from_dict(d: Mapping) -> RealFactor | FiniteFactor:
    kind = d.get("kind")
    if kind == "gaussian":
        return Gaussian(float(d.get("center", 0.0)), float(d.get("sigma", 1.0)))
    if kind == "interval":
        return Interval(float(d["lo"]), float(d["hi"]))
    if kind == "omega":
        return Omega()
    if kind == "ball":
        return Ball(as_rational(str(d.get("center", "0"))), int(d.get("radius", 0)))
    if kind == "char-omega":
        return CharOmega(as_rational(str(d.get("freq", "1"))))
    raise DomainError(f"unknown factor kind {kind!r}")


def test_function_from_dict(d: Mapping) -> TestFunction:
    real = _factor_from_dict(d["real"])
    if not isinstance(real, (Gaussian, Interval)):
        raise DomainError("real factor must be a gaussian or an interval")
    finite = {}
    for p, fd in d.get("finite", {}).items():
        factor = _factor_from_dict(fd)
        if isinstance(factor, (Gaussian, Interval)):
            raise DomainError(f"factor at p={p} must be p-adic")
        finite[int(p)] = factor
    return TestFunction(real, finite)


test_function_from_dict.__test__ = False


def load_presets(path=None) -> dict[str, TestFunction]:
    """Named test functions from a JSON config (bundled presets by default)."""
    if path is None:
        text = resources.files("adelic_market").joinpath("data/presets.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    return {name: test_function_from_dict(d) for name, d in doc["test_functions"].items()}


# --- Weyl operator on p^-N Z_p / p^N Z_p -----------------------------------


@dataclass(frozen=True)
class PhasePoint:
    q: Fraction
    k: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", as_rational(self.q))
        object.__setattr__(self, "k", as_rational(self.k))

    def __add__(self, other: PhasePoint) -> PhasePoint:
        return PhasePoint(self.q + other.q, self.k + other.k)


@dataclass(frozen=True)
class LatticeFunction:
    """Function on the ``p**(2N)`` cosets of ``p**-N Z_p / p**N Z_p``.

    Index ``j`` stands for the coset of ``j / p**N``.
    """

    p: int
    N: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        check_prime(self.p)
        if self.N < 1:
            raise DomainError("window N must be >= 1")
        vals = np.array(self.values, dtype=complex)
        if vals.shape != (self.size,):
            raise DomainError(f"expected {self.size} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("lattice values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return self.p ** (2 * self.N)

    def label(self, j: int) -> Fraction:
        return Fraction(j, self.p**self.N)

    def norm(self) -> float:
        """L2 norm under the normalized counting measure on the cosets."""
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) / self.size)


def _check_window(z: PhasePoint, p: int, N: int) -> None:
    bound = Fraction(p**N)
    for x in (z.q, z.k):
        if padic_norm(x, p) > bound:
            raise DomainError("phase point exceeds truncation")


def coset_index(x: RationalLike, p: int, N: int) -> int:
    """Index of the coset of ``x`` (with ``|x|_p <= p**N``) in the window."""
    y = as_rational(x) * p**N  # now a p-adic integer
    mod = p ** (2 * N)
    return y.numerator * pow(y.denominator, -1, mod) % mod


def weyl_apply(z: PhasePoint, psi: LatticeFunction) -> LatticeFunction:
    """``(W(z) psi)(x) = chi_p(k*(2x + q)) * psi(x + q)`` on the window."""
    p, N = psi.p, psi.N
    _check_window(z, p, N)
    shift = coset_index(z.q, p, N)
    out = np.empty(psi.size, dtype=complex)
    for j in range(psi.size):
        x = psi.label(j)
        out[j] = chi_p(z.k * (2 * x + z.q), p) * psi.values[(j + shift) % psi.size]
    return LatticeFunction(p, N, out)


def composition_phase(z1: PhasePoint, z2: PhasePoint, p: int) -> complex:
    """Scalar ``c`` with ``W(z1) W(z2) = c * W(z1 + z2)``: ``chi_p(k2*q1 - k1*q2)``."""
    return chi_p(z2.k * z1.q - z1.k * z2.q, p)
