"""Exact rational and truncated p-adic arithmetic.

Rationals are plain :class:`fractions.Fraction` values.  A truncated p-adic
number stores its valuation ``v`` and ``N`` digits ``a_0 .. a_{N-1}`` (lowest
power first), meaning the value is known modulo ``p**(v + N)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import DomainError

Rational = Fraction
RationalLike = Union[Fraction, int]

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
# Miller-Rabin with the bases above is deterministic below this bound.
_MR_DETERMINISTIC_BOUND = 3_317_044_064_679_887_385_961_981


def is_prime(n: int) -> bool:
    """Miller-Rabin primality test, deterministic for ``n < 3.3e24``."""
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    bases = list(_SMALL_PRIMES)
    if n >= _MR_DETERMINISTIC_BOUND:
        bases += [43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97]
    for a in bases:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def check_prime(p: int) -> int:
    if not isinstance(p, int) or isinstance(p, bool) or not is_prime(p):
        raise DomainError(f"{p!r} is not a prime")
    return p


def as_rational(x: RationalLike | str) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise DomainError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise DomainError(f"expected an exact rational, got {type(x).__name__}")


def parse_rational(text: str) -> Fraction:
    """Parse ``"a"`` or ``"a/b"`` exactly; decimal notation is rejected."""
    s = text.strip()
    num, sep, den = s.partition("/")
    try:
        n = int(num)
        d = int(den) if sep else 1
    except ValueError:
        raise DomainError(f"not an exact rational 'a/b': {text!r}") from None
    if d == 0:
        raise DomainError(f"zero denominator in {text!r}")
    return Fraction(n, d)


def _int_valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def valuation(x: RationalLike, p: int) -> int:
    """Exponent ``v`` with ``x = p**v * m/n`` and ``p`` dividing neither m nor n."""
    check_prime(p)
    x = as_rational(x)
    if x == 0:
        raise DomainError("valuation undefined for zero")
    return _int_valuation(x.numerator, p) - _int_valuation(x.denominator, p)


@dataclass(frozen=True, order=True)
class Place:
    """A place of Q: the real (archimedean) place when ``p`` is None, else a prime."""

    p: int | None = None

    def __post_init__(self) -> None:
        if self.p is not None:
            check_prime(self.p)

    @classmethod
    def real(cls) -> Place:
        return cls(None)

    @property
    def is_real(self) -> bool:
        return self.p is None

    def __str__(self) -> str:
        return "inf" if self.p is None else str(self.p)

    @classmethod
    def parse(cls, text: str) -> Place:
        t = text.strip().lower()
        if t in ("inf", "infinity", "oo", "∞", "real"):
            return cls(None)
        try:
            return cls(int(t))
        except ValueError:
            raise DomainError(f"invalid place {text!r}") from None


REAL = Place(None)


def padic_norm(x: RationalLike, place: Place | int) -> Fraction:
    """Exact norm of ``x`` at ``place`` (a prime, or the real place).

    ``|0|_p`` is 0 by convention.
    """
    if isinstance(place, int) and not isinstance(place, bool):
        place = Place(place)
    if not isinstance(place, Place):
        raise DomainError(f"invalid place {place!r}")
    x = as_rational(x)
    if place.is_real:
        return abs(x)
    if x == 0:
        return Fraction(0)
    v = valuation(x, place.p)
    return Fraction(1, place.p**v) if v >= 0 else Fraction(place.p ** (-v))


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of ``|n|`` in increasing order (trial division)."""
    n = abs(n)
    out = []
    q = 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1 if q == 2 else 2
    if n > 1:
        out.append(n)
    return out


def support(x: RationalLike) -> list[int]:
    """Primes dividing the numerator or denominator of ``x``."""
    x = as_rational(x)
    return sorted(set(prime_factors(x.numerator)) | set(prime_factors(x.denominator)))


def product_formula(x: RationalLike) -> tuple[list[tuple[Place, Fraction]], Fraction]:
    """Norms of ``x`` at the real place and at each prime of its support.

    All other primes contribute a factor 1, so the returned product is the
    full product over every place of Q and equals 1 exactly.
    """
    x = as_rational(x)
    if x == 0:
        raise DomainError("product formula undefined for zero")
    rows = [(REAL, abs(x))]
    rows += [(Place(p), padic_norm(x, p)) for p in support(x)]
    total = Fraction(1)
    for _, norm in rows:
        total *= norm
    return rows, total


@dataclass(frozen=True)
class PAdicNumber:
    """Truncated p-adic number ``p**v * sum(a_n p**n, n < N)``.

    The value is known modulo ``p**(v + N)``.  A nonzero number is kept in
    canonical form (``digits[0] != 0``).  Zero is the all-zero digit state;
    its ``v`` is only a lower bound on the true valuation.
    """

    p: int
    v: int
    digits: tuple[int, ...]

    def __post_init__(self) -> None:
        check_prime(self.p)
        if len(self.digits) < 1:
            raise DomainError("precision must be at least 1")
        if any(not 0 <= a < self.p for a in self.digits):
            raise DomainError(f"digits must lie in [0, {self.p - 1}]")
        if self.digits[0] == 0 and any(self.digits):
            raise DomainError("nonzero p-adic number must have a_0 != 0")

    @property
    def precision(self) -> int:
        return len(self.digits)

    @property
    def absolute_precision(self) -> int:
        return self.v + len(self.digits)

    @property
    def is_zero(self) -> bool:
        return not any(self.digits)

    @property
    def unit(self) -> int:
        """Integer ``sum(a_n p**n)``, the digits read as a number."""
        u = 0
        for a in reversed(self.digits):
            u = u * self.p + a
        return u

    def to_rational(self) -> Fraction:
        """The rational representative ``p**v * unit``."""
        return Fraction(self.unit) * Fraction(self.p) ** self.v

    def __add__(self, other: PAdicNumber) -> PAdicNumber:
        return padic_add(self, other)

    def __mul__(self, other: PAdicNumber) -> PAdicNumber:
        return padic_mul(self, other)

    def __neg__(self) -> PAdicNumber:
        n = self.precision
        return _normalize(self.p, self.v, -self.unit, n)

    def __sub__(self, other: PAdicNumber) -> PAdicNumber:
        return padic_add(self, -other)

    def __str__(self) -> str:
        shown = ",".join(str(a) for a in self.digits[:6])
        if self.precision > 6:
            shown += ",…"
        return f"p={self.p} v={self.v} digits=[{shown}] (N={self.precision})"


def _normalize(p: int, v: int, s: int, n: int) -> PAdicNumber:
    """Canonical form of ``p**v * s`` known modulo ``p**(v + n)``."""
    modulus = p**n
    s %= modulus
    if s == 0:
        return PAdicNumber(p, v, (0,) * n)
    k = _int_valuation(s, p)
    s //= p**k
    n -= k
    digits = []
    for _ in range(n):
        s, a = divmod(s, p)
        digits.append(a)
    return PAdicNumber(p, v + k, tuple(digits))


def expand(x: RationalLike, p: int, n: int) -> PAdicNumber:
    """Canonical ``n``-digit expansion of the rational ``x``.

    Digits come from p-adic long division: take the residue of the current
    remainder modulo ``p`` as the digit, subtract it and divide by ``p``.
    """
    check_prime(p)
    if not isinstance(n, int) or n < 1:
        raise DomainError("precision N must be a positive integer")
    x = as_rational(x)
    if x == 0:
        return PAdicNumber(p, 0, (0,) * n)
    v = valuation(x, p)
    r = x / Fraction(p) ** v
    digits = []
    for _ in range(n):
        a = r.numerator * pow(r.denominator, -1, p) % p
        digits.append(a)
        r = (r - a) / p
    return PAdicNumber(p, v, tuple(digits))


def _same_prime(a: PAdicNumber, b: PAdicNumber) -> int:
    if a.p != b.p:
        raise DomainError(f"mismatched primes {a.p} and {b.p}")
    return a.p


def padic_add(a: PAdicNumber, b: PAdicNumber) -> PAdicNumber:
    """Sum with absolute precision ``min(v_a + N_a, v_b + N_b)``.

    Cancellation of leading digits shrinks the relative precision of the
    result instead of padding it with invented zeros.
    """
    p = _same_prime(a, b)
    m = min(a.v, b.v)
    absolute = min(a.absolute_precision, b.absolute_precision)
    s = a.unit * p ** (a.v - m) + b.unit * p ** (b.v - m)
    return _normalize(p, m, s, absolute - m)


def padic_mul(a: PAdicNumber, b: PAdicNumber) -> PAdicNumber:
    """Product with relative precision ``min(N_a, N_b)``."""
    p = _same_prime(a, b)
    return _normalize(p, a.v + b.v, a.unit * b.unit, min(a.precision, b.precision))


def congruent(x: RationalLike, y: RationalLike, p: int, k: int) -> bool:
    """True when ``x - y`` lies in ``p**k Z_p``."""
    d = as_rational(x) - as_rational(y)
    return d == 0 or valuation(d, p) >= k
