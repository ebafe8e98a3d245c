"""Finite synchronous multi-rate sampling (SMRS) schemes.

A scheme samples one period ``T`` on ``K`` uniform grids with ``Q_k`` points
each, all starting at ``t0``: ``t0 + T q / Q_k``.  Grid points that coincide
(equal fractions ``q/Q_k``) are one physical sample.  Coincidence is decided
on integers: every fraction is written as ``tick / L`` with ``L = lcm(Q_k)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import NumericalError, ValidationError


@dataclass(frozen=True)
class SmrsScheme:
    moduli: tuple[int, ...]
    t0: float
    T: float
    L: int
    ticks: np.ndarray                  # sorted distinct numerators over L
    grid_map: tuple[np.ndarray, ...]   # grid k, point q -> index into ticks

    @property
    def K(self) -> int:
        return len(self.moduli)

    @property
    def n_rows(self) -> int:
        return int(sum(self.moduli))

    @property
    def n_instants(self) -> int:
        return len(self.ticks)

    @property
    def fractions(self) -> np.ndarray:
        """Instant offsets ``tick/L`` in units of T, in [0, 1)."""
        return self.ticks / self.L

    @property
    def instants(self) -> np.ndarray:
        return self.t0 + self.T * self.fractions

    @property
    def flat_map(self) -> np.ndarray:
        """Physical-instant index for every (k, q) in row-major order."""
        return np.concatenate(self.grid_map)

    def canonical_kq(self) -> tuple[np.ndarray, np.ndarray]:
        """For each physical instant the first (k, q) pair that lands on it."""
        k_of = np.full(self.n_instants, -1, dtype=np.int64)
        q_of = np.zeros(self.n_instants, dtype=np.int64)
        for k, idx in enumerate(self.grid_map):
            fresh = k_of[idx] < 0
            k_of[idx[fresh]] = k
            q_of[idx[fresh]] = np.nonzero(fresh)[0]
        return k_of, q_of

    def fraction_of(self, k: int, q: int) -> tuple[int, int]:
        g = math.gcd(q, self.moduli[k])
        return q // g, self.moduli[k] // g

    def to_dict(self) -> dict:
        num_den = [list(self.fraction_of(k, q)) for k, q in zip(*self.canonical_kq())]
        return {"moduli": list(self.moduli), "t0": self.t0, "T": self.T,
                "n_instants": self.n_instants, "n_rows": self.n_rows,
                "instants": num_den}


def build_scheme(moduli, t0: float = 0.0, T: float = 1.0) -> SmrsScheme:
    moduli = tuple(int(Q) for Q in moduli)
    if not moduli:
        raise ValidationError("at least one modulus is required")
    if any(Q < 1 for Q in moduli):
        raise ValidationError(f"moduli must be positive, got {moduli}")
    if len(set(moduli)) != len(moduli):
        raise ValidationError(f"duplicate moduli in {moduli}")
    if not T > 0:
        raise ValidationError("T must be positive")
    L = reduce(math.lcm, moduli)
    if L > 2 ** 62:
        raise NumericalError(f"lcm of moduli ({L}) does not fit in 64 bits")
    raw = [np.arange(Q, dtype=np.int64) * (L // Q) for Q in moduli]
    ticks = np.unique(np.concatenate(raw))
    grid_map = tuple(np.searchsorted(ticks, r) for r in raw)
    return SmrsScheme(moduli, float(t0), float(T), L, ticks, grid_map)


def consecutive_moduli(n_unknowns: int, K: int) -> list[int]:
    """Starting set ``Q_1, Q_1+1, ..., Q_1+K-1``.

    ``Q_1`` is the smallest value whose scheme has at least ``n_unknowns``
    distinct instants, so the folded system can be minimally over-determined.
    For 273 unknowns and ``K = 4`` this gives 68..71 (274 instants).
    """
    if n_unknowns < 1 or K < 1:
        raise ValidationError("need n_unknowns >= 1 and K >= 1")
    Q1 = max(1, -(-(n_unknowns - K * (K - 1) // 2) // K))
    while build_scheme(range(Q1, Q1 + K)).n_instants < n_unknowns:
        Q1 += 1
    return [Q1 + k for k in range(K)]


# Miller-Rabin witnesses that are deterministic for every n < 2**64
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
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


def next_prime(n: int) -> int:
    """Smallest prime ``>= n``."""
    if n <= 2:
        return 2
    p = n if n % 2 else n + 1
    while not is_prime(p):
        p += 2
    return p


@dataclass(frozen=True)
class PeriodAdjustment:
    R: int
    P: int
    T: float
    T_prime: float
    perturbation: float   # P/R - 1


def universalize_period(moduli, nu: int, T: float = 1.0) -> PeriodAdjustment:
    """Stretch ``T`` so the multi-coset period count ``nu*lcm(Q)`` becomes prime."""
    if nu < 1:
        raise ValidationError("nu must be a positive integer")
    R = int(nu) * reduce(math.lcm, (int(Q) for Q in moduli))
    if R >= 2 ** 63:
        raise NumericalError(f"R = {R} exceeds 2**63")
    P = next_prime(R)
    if P >= 2 ** 64:
        raise NumericalError("prime search left the 64-bit range")
    # (P - R)/R exactly, then to float
    perturbation = (P - R) / R
    return PeriodAdjustment(R=R, P=P, T=float(T), T_prime=float(T) * P / R,
                            perturbation=perturbation)
