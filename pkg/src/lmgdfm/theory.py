"""Closed-form rates and polynomial tuning rules.

Polynomial tuning sets ``M(T) = T^m``, ``B_T = T^{-b}`` and ``T = n^kappa``;
the functions below return the optimal exponents for the three memory
regimes together with validity flags for infeasible parameter pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "GapDominance",
    "MemoryProfile",
    "Rates",
    "TuningResult",
    "b_star",
    "delta_rate",
    "gamma_star",
    "gap_dominance_check",
    "r_rates",
    "rho_recursion",
    "truncation_M",
    "tune_common",
    "tune_factor_hetero",
    "tune_row_hetero",
]


class MemoryDomainError(ValueError):
    pass


@dataclass(frozen=True)
class MemoryProfile:
    """Distinct memory values of a model in decreasing order."""

    regime: str
    values: tuple[float, ...]

    @classmethod
    def from_matrix(cls, d, regime: str | None = None) -> "MemoryProfile":
        d = np.atleast_2d(np.asarray(d, dtype=float))
        if np.any(d < 0) or np.any(d >= 0.5):
            raise MemoryDomainError("memory parameters must lie in [0, 0.5)")
        if regime is None:
            if np.all(d == d.flat[0]):
                regime = "factor-homogeneous"
            elif np.all(d == d[:1, :]):
                regime = "factor-heterogeneous"
            elif np.all(d == d[:, :1]):
                regime = "row-heterogeneous"
            else:
                regime = "entry-wise"
        return cls(regime, tuple(sorted(set(d.ravel().tolist()), reverse=True)))

    @property
    def d(self) -> float:
        return self.values[0]

    @property
    def d_tilde(self) -> float:
        return self.values[-1]

    @property
    def spread(self) -> float:
        return self.d - self.d_tilde


@dataclass(frozen=True)
class TuningResult:
    b_star: float
    m_star: float
    kappa_star: float
    regime: str
    valid: bool = True
    reason: str = ""

    def cell(self, value: str, decimals: int) -> str:
        """Table cell for ``value`` (``"b"``, ``"m"`` or ``"kappa"``); ``-`` when invalid."""
        if not self.valid:
            return "-"
        x = {"b": self.b_star, "m": self.m_star, "kappa": self.kappa_star}[value]
        return f"{x:.{decimals}f}"


def _alpha(d: Sequence[float], j1: int, j2: int) -> float:
    """alpha_{j1,j2} with 1-based indices, alpha_{0,j} = 1 and d_{(q+1)} = 0."""
    if j1 == 0:
        return 1.0
    dj1 = d[j1 - 1]
    dj2 = d[j2 - 1] if j2 <= len(d) else 0.0
    return 2.0 * abs(dj1 - dj2)


def _check_sequence(d: Sequence[float]) -> list[float]:
    d = [float(x) for x in d]
    if not d:
        raise MemoryDomainError("need at least one memory value")
    if any(x < 0 or x >= 0.5 for x in d):
        raise MemoryDomainError("memory values must lie in [0, 0.5)")
    if any(a <= b for a, b in zip(d, d[1:])):
        raise MemoryDomainError("memory values must be strictly decreasing (ties have zero gap)")
    return d


@dataclass(frozen=True)
class GapDominance:
    holds: bool
    rho: tuple[float, ...]
    violation: tuple[int, int] | None = None  # (l, m) of the first failing 2 rho_l > alpha_{l,m}
    margins: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.holds


def _recursion(d: Sequence[float]) -> tuple[list[float], dict]:
    q = len(d)
    rho = [1.0]
    margins = {}
    for m in range(1, q + 1):
        terms = [rho[m - 1], _alpha(d, m, m + 1)]
        for l in range(0, m):
            margin = 2.0 * rho[l] - _alpha(d, l, m)
            margins[(l, m)] = margin
            terms.append(margin)
        rho.append(min(terms))
    return rho[1:], margins


def rho_recursion(d: Sequence[float]) -> tuple[float, ...]:
    """Hoelder exponents rho_1..rho_q of the eigenprojection for factor-wise memory.

    Raises when some ``2 rho_l - alpha_{l,m}`` is not positive, since the
    recursion then stops describing a positive exponent.
    """
    d = _check_sequence(d)
    rho, margins = _recursion(d)
    bad = [(lm, v) for lm, v in margins.items() if v <= 0]
    if bad:
        (l, m), v = bad[0]
        raise MemoryDomainError(f"gap dominance violated: 2 rho_{l} - alpha_{l},{m} = {v:.4g} <= 0")
    return tuple(rho)


def gap_dominance_check(d: Sequence[float]) -> GapDominance:
    """Check 2 rho_l > alpha_{l,m} for l = 1..m-1, m = 2..q."""
    d = _check_sequence(d)
    rho, margins = _recursion(d)
    rho_full = [1.0] + rho
    for m in range(2, len(d) + 1):
        for l in range(1, m):
            if not 2.0 * rho_full[l] > _alpha(d, l, m):
                return GapDominance(False, tuple(rho), (l, m), margins)
    return GapDominance(True, tuple(rho), None, margins)


def b_star(spread: float) -> float:
    if not 0 <= spread < 0.5:
        raise MemoryDomainError("memory spread must lie in [0, 0.5)")
    return 1.0 / (2.0 * (1.0 - spread))


def gamma_star(spread: float) -> float:
    return (1.0 - 2.0 * spread) / (2.0 * (1.0 - spread))


def tune_common(d: float) -> TuningResult:
    if not 0 <= d < 0.5:
        raise MemoryDomainError("memory parameter must lie in [0, 0.5)")
    return TuningResult(0.5, 0.25, 2.0, "factor-homogeneous")


def tune_factor_hetero(d: float, spread: float, rho: float) -> TuningResult:
    """Optimal (b, m, kappa) when memory differs across factors."""
    regime = "factor-heterogeneous"
    if not 0 <= spread < 0.5:
        return TuningResult(math.nan, math.nan, math.nan, regime, False, "spread outside [0, 0.5)")
    b = b_star(spread)
    reasons = []
    if d < spread - 1e-12:
        reasons.append("d < spread")
    if spread > 0 and rho > 2 * spread + 1e-12:
        reasons.append("rho > 2 * spread")
    if 0.5 + rho - d <= 0:
        reasons.append("1/2 + rho - d <= 0")
    if reasons:
        return TuningResult(b, math.nan, math.nan, regime, False, "; ".join(reasons))
    g = gamma_star(spread)
    m = g / (1.5 + rho - d)
    kappa = (1 - spread) * (1.5 + rho - d) / ((1 - 2 * spread) * (0.5 + rho - d))
    return TuningResult(b, m, kappa, regime)


def tune_row_hetero(d: float, spread: float) -> TuningResult:
    """Optimal (b_h, m_h, kappa_h) when memory differs across rows.

    Valid only for spread < d and 1 - 4 spread - 2d > 0.
    """
    regime = "row-heterogeneous"
    if not 0 <= spread < 0.5:
        return TuningResult(math.nan, math.nan, math.nan, regime, False, "spread outside [0, 0.5)")
    b = b_star(spread)
    reasons = []
    if not spread < d:
        reasons.append("spread >= d")
    if not 1 - 4 * spread - 2 * d > 1e-12:
        reasons.append("1 - 4 spread - 2d <= 0")
    if reasons:
        return TuningResult(b, math.nan, math.nan, regime, False, "; ".join(reasons))
    m = (1 - 2 * spread) / ((1 - spread) * (3 - 4 * spread - 2 * d))
    kappa = (1 - spread) * (3 - 4 * spread - 2 * d) / ((1 - 2 * spread) * (1 - 4 * spread - 2 * d))
    return TuningResult(b, m, kappa, regime)


def delta_rate(T: float, bandwidth: float, spread: float) -> float:
    """B^{1 - 2 spread} + ln T / (T B)."""
    if T < 2:
        raise ValueError("need T >= 2")
    if not 0 < bandwidth <= 1:
        raise ValueError("bandwidth must lie in (0, 1]")
    if not 0 <= spread < 0.5:
        raise MemoryDomainError("memory spread must lie in [0, 0.5)")
    return bandwidth ** (1 - 2 * spread) + math.log(T) / (T * bandwidth)


@dataclass(frozen=True)
class Rates:
    r0: float
    r1: float
    r2: float
    r2_simplified: float | None = None
    r2_available: bool = True

    @property
    def r(self) -> float:
        return min(self.r0, self.r1, self.r2)


def r_rates(n: int, T: int, M: int, bandwidth: float, regime: str, d: float = 0.0,
            spread: float = 0.0, rho: float | None = None, white_idio: bool = False) -> Rates:
    """Consistency rates r0, r1, r2 and their minimum.

    ``regime`` is one of ``common``, ``factor``, ``row``.  For the common-d
    regime with d > 0 the full ``min(M/sqrt n, sqrt n M^{2d}) / log M`` is
    returned in ``r2`` and ``M / (log M sqrt n)`` in ``r2_simplified``.
    """
    r0 = math.sqrt(n)
    delta = delta_rate(T, bandwidth, spread)
    r1 = 1.0 / (M * delta * math.sqrt(n))
    if regime == "common":
        logM = math.log(M) if M > 1 else float("nan")
        simple = M / (logM * math.sqrt(n))
        if white_idio or d == 0:
            return Rates(r0, r1, simple, simple)
        full = min(M / math.sqrt(n), math.sqrt(n) * M ** (2 * d)) / logM
        return Rates(r0, r1, full, simple)
    if regime == "factor":
        if rho is None:
            raise ValueError("factor regime needs rho")
        return Rates(r0, r1, n ** -0.5 * M ** (0.5 + rho - d))
    if regime == "row":
        if not 4 * spread + 2 * d - 1 < 0:
            return Rates(r0, r1, math.inf, None, r2_available=False)
        return Rates(r0, r1, n ** -0.5 * M ** (0.5 - 2 * spread - d))
    raise ValueError(f"unknown regime {regime!r}")


def truncation_M(delta: float, n: int, beta: float, C_M: float) -> int:
    """floor((C_M / (delta sqrt n))^beta), clamped below at 1."""
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if C_M <= 0:
        raise ValueError("C_M must be positive")
    # tiny guard so exact integers are not floored one step down by rounding
    return max(1, int(math.floor((C_M / (delta * math.sqrt(n))) ** beta + 1e-12)))
