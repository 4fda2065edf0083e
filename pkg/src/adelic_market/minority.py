"""Minority game (Challet-Zhang) with the spin-glass form of its volatility.

Agents hold ``S`` strategy tables mapping each of ``K = 2**M`` histories to
an action in {-1, +1}.  Each round every agent plays its best-scoring
strategy, the normalized attendance is ``A = N**-0.5 * sum(actions)``, the
minority side wins, and every strategy's virtual score moves by
``-a * sign(A)``.

With ``S = 2`` the choice of strategy is a spin ``s_i`` (+1 picks the
first table, -1 the second) and the action is ``omega_i + s_i * xi_i``.
Averaging ``A**2`` uniformly over histories gives exactly::

    <A^2> = c + (1/N) * (sum_i h_i s_i + 1/2 * sum_ij J_ij s_i s_j)

    Omega^mu = sum_j omega_j^mu
    c        = <Omega^2> / N
    h_i      = 2 <Omega xi_i>
    J_ij     = 2 <xi_i xi_j>

The constant ``c`` averages to exactly 1/2 over uniformly random tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .series import PriceSeries

ENDOGENOUS = "endogenous"
EXOGENOUS = "exogenous"
DEFAULT_LAMBDA = 0.01


@dataclass(frozen=True)
class MGConfig:
    N: int
    M: int
    S: int = 2
    T: int = 1000
    seed: int = 0
    history: str = ENDOGENOUS

    def __post_init__(self) -> None:
        for name in ("N", "M", "S", "T"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be positive")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must fit in 64 bits")
        if self.history not in (ENDOGENOUS, EXOGENOUS):
            raise DomainError(f"history must be {ENDOGENOUS!r} or {EXOGENOUS!r}")

    @property
    def K(self) -> int:
        return 2**self.M

    def to_dict(self) -> dict:
        return {"N": self.N, "M": self.M, "S": self.S, "T": self.T,
                "seed": self.seed, "history": self.history}


@dataclass
class MGState:
    config: MGConfig
    tables: np.ndarray  # (N, S, K) of +-1, read-only
    scores: np.ndarray  # (N, S)
    mu: int
    rng: np.random.Generator = field(repr=False)
    attendance: list[float] = field(default_factory=list)
    t: int = 0


def mg_init(cfg: MGConfig, tables: np.ndarray | None = None) -> MGState:
    """Draw strategy tables and the initial history from the seeded generator.

    ``tables`` overrides the drawn tables (the generator is still advanced
    identically, so history draws do not depend on the override).
    """
    rng = np.random.default_rng(cfg.seed)
    drawn = rng.choice(np.array([-1, 1], dtype=np.int8), size=(cfg.N, cfg.S, cfg.K))
    if tables is not None:
        drawn = np.asarray(tables, dtype=np.int8)
        if drawn.shape != (cfg.N, cfg.S, cfg.K) or not np.all(np.abs(drawn) == 1):
            raise DomainError(f"tables must be +-1 with shape {(cfg.N, cfg.S, cfg.K)}")
        drawn = drawn.copy()
    drawn.setflags(write=False)
    mu = int(rng.integers(cfg.K))
    return MGState(cfg, drawn, np.zeros((cfg.N, cfg.S)), mu, rng)


def mg_step(state: MGState) -> float:
    """Play one round in place and return the normalized attendance.

    Ties between strategy scores go to the lowest strategy index.  With an
    even number of agents a zero attendance leaves scores unchanged and
    records history bit 0.
    """
    cfg = state.config
    best = np.argmax(state.scores, axis=1)
    actions = state.tables[np.arange(cfg.N), best, state.mu]
    total = int(actions.sum(dtype=np.int64))
    A = total / math.sqrt(cfg.N)
    sign = (total > 0) - (total < 0)
    if sign:
        state.scores -= sign * state.tables[:, :, state.mu]
    if cfg.history == ENDOGENOUS:
        bit = 1 if total < 0 else 0  # winning (minority) side is +1
        state.mu = (2 * state.mu + bit) % cfg.K
    else:
        state.mu = int(state.rng.integers(cfg.K))
    state.attendance.append(A)
    state.t += 1
    return A


def mg_run(cfg: MGConfig, tables: np.ndarray | None = None) -> MGState:
    state = mg_init(cfg, tables)
    for _ in range(cfg.T):
        mg_step(state)
    return state


def sigma2(series: Sequence[float], start: int = 0, stop: int | None = None) -> float:
    """``<A**2> - <A>**2`` over ``series[start:stop]`` with uniform weights.

    For the normalized attendance this is the per-agent volatility
    ``sigma**2 / N`` of the raw attendance ``sum(actions)``.
    """
    window = np.asarray(series[start:stop], dtype=float)
    if window.size == 0:
        raise DomainError("empty window")
    mean = window.mean()
    return float(np.mean(window * window) - mean * mean)


@dataclass(frozen=True)
class SpinDecomposition:
    omega: np.ndarray  # (N, K)
    xi: np.ndarray  # (N, K)
    h: np.ndarray  # (N,)
    J: np.ndarray  # (N, N)
    const: float
    lhs: float
    rhs: float


def decompose_tables(tables: np.ndarray):
    """Spin-glass coefficients for a batch of two-strategy tables.

    ``tables`` has shape ``(..., N, 2, K)``.  Returns ``(omega, xi, const, h, J)``
    with the batch dimensions leading.
    """
    a = np.asarray(tables, dtype=float)
    if a.shape[-2] != 2:
        raise DomainError("spin decomposition needs S = 2")
    N = a.shape[-3]
    omega = 0.5 * (a[..., 0, :] + a[..., 1, :])
    xi = 0.5 * (a[..., 0, :] - a[..., 1, :])
    big_omega = omega.sum(axis=-2)
    const = np.mean(big_omega * big_omega, axis=-1) / N
    h = 2.0 * np.mean(big_omega[..., None, :] * xi, axis=-1)
    J = 2.0 * (xi @ np.swapaxes(xi, -1, -2)) / xi.shape[-1]
    return omega, xi, const, h, J


def quadratic_form(const, h, J, spins: np.ndarray) -> np.ndarray:
    """``const + (1/N) * (h.s + 1/2 s.J.s)`` for spins of shape ``(..., N)``."""
    s = np.asarray(spins, dtype=float)
    N = s.shape[-1]
    linear = np.sum(h * s, axis=-1)
    quad = np.sum((np.asarray(J) @ s[..., None])[..., 0] * s, axis=-1)
    return const + (linear + 0.5 * quad) / N


def played_attendance(tables: np.ndarray, spins: np.ndarray) -> np.ndarray:
    """Normalized attendance per history when agent i plays strategy ``s_i``."""
    a = np.asarray(tables)
    s = np.asarray(spins)
    N = a.shape[-3]
    chosen = np.where((s > 0)[..., None], a[..., 0, :], a[..., 1, :])
    return chosen.sum(axis=-2) / math.sqrt(N)


def spin_decompose(state: MGState | np.ndarray, spins: Sequence[int]) -> SpinDecomposition:
    """Coefficients plus both sides of the history-averaged identity."""
    tables = state.tables if isinstance(state, MGState) else np.asarray(state)
    if tables.ndim != 3:
        raise DomainError("expected tables of shape (N, S, K)")
    if tables.shape[1] != 2:
        raise DomainError("spin decomposition unsupported for S != 2")
    s = np.asarray(spins, dtype=int)
    if s.shape != (tables.shape[0],) or not np.all(np.abs(s) == 1):
        raise DomainError("spins must be +-1, one per agent")
    omega, xi, const, h, J = decompose_tables(tables)
    A = played_attendance(tables, s)
    lhs = float(np.mean(A * A))
    rhs = float(quadratic_form(const, h, J, s))
    return SpinDecomposition(omega, xi, h, J, float(const), lhs, rhs)


def price_from_attendance(series: Sequence[float], p0: float, lam: float = DEFAULT_LAMBDA,
                          t0: float = 0.0, dt: float = 86400.0) -> PriceSeries:
    """``price(t) = p0 * exp(lam * sum(A(u), u <= t))`` on a regular time grid."""
    if not p0 > 0:
        raise DomainError("initial price must be positive")
    log_moves = lam * np.cumsum(np.asarray(series, dtype=float))
    prices = p0 * np.exp(log_moves)
    ts = t0 + dt * np.arange(1, len(prices) + 1)
    return PriceSeries.from_arrays(ts, prices, label="close")


def sweep(configs: Sequence[MGConfig], start: int = 0) -> list[dict]:
    """Independent runs summarised in input order."""
    out = []
    for cfg in configs:
        state = mg_run(cfg)
        A = state.attendance
        out.append({
            "config": cfg.to_dict(),
            "sigma2_over_N": sigma2(A, start),
            "mean_A": float(np.mean(A[start:])),
            "normalization": "A = N^-1/2 sum_i a_i; sigma2/N = var(A)",
        })
    return out
