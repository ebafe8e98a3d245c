"""Scheme design: solvability, noise sensitivity and greedy moduli selection."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bands import IndexSets
from .errors import RankDeficientError
from .scheme import SmrsScheme, build_scheme
from .solver import build_folded_system, quadratic_on_grid, sensitivity_form

DEFAULT_GRID = 8192


def _index_array(J) -> np.ndarray:
    if isinstance(J, IndexSets):
        return J.union
    return np.unique(np.asarray(J, dtype=np.int64))


def to_db(x):
    return 20.0 * np.log10(x)


@dataclass(frozen=True)
class RankReport:
    rank: int
    rows: int
    cols: int
    n_instants: int
    density: float

    @property
    def full_rank(self) -> bool:
        return self.rank == self.cols

    def to_dict(self) -> dict:
        return {"rank": self.rank, "rows": self.rows, "cols": self.cols,
                "n_instants": self.n_instants, "density": self.density,
                "full_column_rank": self.full_rank}


def check_rank(scheme: SmrsScheme, sets) -> RankReport:
    system = build_folded_system(scheme.moduli, _index_array(sets))
    return RankReport(system.rank, system.n_rows, len(system.cols),
                      scheme.n_instants, system.density)


@dataclass(frozen=True)
class SensitivityReport:
    t: np.ndarray
    gamma: np.ndarray
    grid_density: int

    @property
    def gamma_max(self) -> float:
        return float(self.gamma.max())

    @property
    def gamma_db(self) -> np.ndarray:
        return to_db(self.gamma)

    @property
    def gamma_max_db(self) -> float:
        return float(to_db(self.gamma_max))


def sensitivity(scheme: SmrsScheme, sets, J_sub=None, grid_density: int = DEFAULT_GRID,
                system=None, physical: bool = False) -> SensitivityReport:
    """Noise amplification ``Gamma(t)`` over one period and its maximum.

    ``Gamma(t)^2`` is the sum over all grid points ``(k, q)`` of squared
    kernel magnitudes at ``t`` (base instant 0).  With ``physical=True``
    coincident grid points are merged into one sample first.
    """
    J = _index_array(sets)
    if system is None:
        system = build_folded_system(scheme.moduli, J)
    if not system.rank_ok:
        raise RankDeficientError(f"rank {system.rank} < {len(J)}; no pseudo-inverse")
    sub = system.cols if J_sub is None else _index_array(J_sub)
    A = sensitivity_form(system, sub, scheme if physical else None)
    t, g2 = quadratic_on_grid(A, sub, grid_density, scheme.T)
    return SensitivityReport(t * 1.0, np.sqrt(g2), grid_density)


def _gamma_max(moduli, J, grid_density):
    system = build_folded_system(moduli, J)
    if not system.rank_ok:
        return np.inf
    _, g2 = quadratic_on_grid(system.gram_inv, system.cols, grid_density)
    return float(np.sqrt(g2.max()))


@dataclass
class AugmentResult:
    scheme: SmrsScheme
    added: list[int]
    history_db: list[float]
    target_met: bool
    grid_density: int = DEFAULT_GRID
    log: list[dict] = field(default_factory=list)


def greedy_augment(scheme: SmrsScheme, sets, candidates=None, target_db: float = -np.inf,
                   max_added: int = 8, grid_density: int = DEFAULT_GRID,
                   threads: int = 1) -> AugmentResult:
    """Add moduli one at a time, each time the one that lowers ``Gamma`` most.

    Stops when the target is met, no candidate lowers ``Gamma``, the pool is
    empty or ``max_added`` moduli have been added.  Ties go to the smaller
    modulus.
    """
    J = _index_array(sets)
    moduli = list(scheme.moduli)
    pool = sorted(set(range(2, max(moduli))) if candidates is None else set(int(c) for c in candidates))
    pool = [c for c in pool if c not in moduli and c >= 1]
    current = _gamma_max(moduli, J, grid_density)
    if not np.isfinite(current):
        raise RankDeficientError("base scheme is rank deficient")
    history = [float(to_db(current))]
    added, log = [], []
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        while to_db(current) > target_db and pool and len(added) < max_added:
            scores = list(ex.map(lambda c: _gamma_max(moduli + [c], J, grid_density), pool))
            best = min(range(len(pool)), key=lambda i: (scores[i], pool[i]))
            if not scores[best] < current:
                break
            choice = pool.pop(best)
            moduli.append(choice)
            added.append(choice)
            current = scores[best]
            history.append(float(to_db(current)))
            log.append({"added": choice, "gamma_db": history[-1]})
    new = build_scheme(sorted(moduli), scheme.t0, scheme.T)
    return AugmentResult(new, added, history, bool(to_db(current) <= target_db),
                         grid_density, log)
