"""Block reconstruction of a multiband signal on the infinite SMRS grid.

Around a block center ``tau`` the windowed signal ``z(tau + t) w(t)`` is, up
to the window tail, a trigonometric polynomial over ``I_zw``.  The infinite
grid ``nT + T q/Q_k`` contains exactly one copy of every finite-scheme point
(base instant ``-tau``) inside ``[tau - T/2, tau + T/2)``; those samples give
the polynomial, and dividing by ``w`` returns ``z`` or any component on the
accurate span ``[tau - T1/2, tau + T1/2)``.
"""
from __future__ import annotations

import math
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bands import IndexSets
from .errors import ValidationError
from .scheme import SmrsScheme
from .solver import (FoldedSystem, fold_grid_values, quadratic_at,
                     sensitivity_form, solve_coefficients)
from .window import WindowSpec, eval_window

MAX_TAU_DEN = 10 ** 9


def as_fraction(x) -> Fraction:
    """Exact value of ``x``; floats are snapped to the nearest ratio with
    denominator up to 1e9 so that e.g. ``0.1`` means ``1/10``."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return Fraction(float(x)).limit_denominator(MAX_TAU_DEN)


@dataclass(frozen=True)
class BlockPlan:
    scheme: SmrsScheme
    tau_over_T: Fraction
    n: np.ndarray      # period shift per physical instant of the scheme
    rel: np.ndarray    # relative instants t' in [-T/2, T/2), seconds

    @property
    def T(self) -> float:
        return self.scheme.T

    @property
    def tau(self) -> float:
        return float(self.tau_over_T) * self.T

    @property
    def absolute(self) -> np.ndarray:
        """Absolute instants ``nT + T tick/L``."""
        return self.T * (self.n + self.scheme.fractions)

    @property
    def keys(self) -> np.ndarray:
        """Integer key per instant: ``n * n_instants + tick index``."""
        return self.n * self.scheme.n_instants + np.arange(self.scheme.n_instants)

    def exact_rel(self) -> list[Fraction]:
        L = self.scheme.L
        return [Fraction(int(n)) + Fraction(int(k), L) - self.tau_over_T
                for n, k in zip(self.n, self.scheme.ticks)]


def plan_block(scheme: SmrsScheme, tau) -> BlockPlan:
    """Shifts ``n`` with ``-tau + T tick/L + nT`` in ``[-T/2, T/2)``.

    ``n = ceil(tau/T - 1/2 - tick/L)``, evaluated in integer arithmetic.
    """
    x = as_fraction(tau) / as_fraction(scheme.T)
    a, d, L = x.numerator, x.denominator, scheme.L
    n = np.array([-((-(2 * a * L - d * L - 2 * d * int(k))) // (2 * d * L)) for k in scheme.ticks],
                 dtype=np.int64)
    rel = scheme.T * ((n - x.numerator // x.denominator).astype(float)
                      - float(x - x.numerator // x.denominator) + scheme.fractions)
    return BlockPlan(scheme, x, n, rel)


@dataclass
class BlockResult:
    tau: float
    cols: np.ndarray
    c_p: np.ndarray
    out_t: np.ndarray
    z: np.ndarray
    components: dict[int, np.ndarray] = field(default_factory=dict)


def block_coefficients(plan: BlockPlan, system: FoldedSystem, window: WindowSpec, samples,
                       method: str = "dense") -> np.ndarray:
    """Spectrum samples ``c_p(tau)`` of the windowed block, ordered as ``system.cols``."""
    x = np.asarray(samples, dtype=complex)
    scheme = plan.scheme
    if x.shape != (scheme.n_instants,):
        raise ValidationError(f"block needs {scheme.n_instants} samples, got {x.shape}")
    v = x * eval_window(window, plan.rel)
    data = fold_grid_values(scheme.moduli, [v[idx] for idx in scheme.grid_map])
    coef = solve_coefficients(system, data, t0=-plan.tau, T=plan.T, method=method,
                              t0_over_T=-plan.tau_over_T)
    return coef.beta_p


def reconstruct_block(plan: BlockPlan, system: FoldedSystem, window: WindowSpec, samples,
                      out_grid, sets: IndexSets, components=None,
                      method: str = "dense") -> BlockResult:
    """Recover ``z`` (and selected components) on ``out_grid`` inside the accurate span."""
    out_t = np.atleast_1d(np.asarray(out_grid, dtype=float))
    rel = out_t - plan.tau
    if np.any(np.abs(rel) > window.T1 / 2 * (1 + 1e-12)):
        raise ValidationError("output instants must lie within T1/2 of the block center")
    c = block_coefficients(plan, system, window, samples, method)
    w = eval_window(window, rel)
    E = np.exp(2j * np.pi * np.outer(rel / plan.T, system.cols))
    z = (E @ c) / w
    comps = {}
    for m in (range(len(sets.per_component)) if components is None else components):
        pos = system.positions(sets.per_component[m])
        comps[int(m)] = (E[:, pos] @ c[pos]) / w
    return BlockResult(plan.tau, system.cols, c, out_t, z, comps)


# -- sample sources ----------------------------------------------------------

class SampleStore:
    """Samples held per physical instant of the infinite grid.

    Instants are keyed by ``n * n_instants + tick index`` (``n`` the period
    shift), so lookups never compare floating-point times.  ``clean`` keeps
    the noiseless values when they are known.
    """

    def __init__(self, scheme: SmrsScheme, keys, values, clean=None):
        order = np.argsort(keys)
        self.scheme = scheme
        self.keys = np.asarray(keys, dtype=np.int64)[order]
        self.values = np.asarray(values, dtype=complex)[order]
        self.clean = None if clean is None else np.asarray(clean, dtype=complex)[order]

    def _index(self, keys):
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, len(self.keys) - 1)
        if not np.all(self.keys[pos] == keys):
            raise ValidationError("sample store lacks instants requested by a block")
        return pos

    def sample(self, plan: BlockPlan) -> np.ndarray:
        return self.values[self._index(plan.keys)]

    def sample_clean(self, plan: BlockPlan) -> np.ndarray:
        return self.clean[self._index(plan.keys)]

    @property
    def times(self) -> np.ndarray:
        n, idx = np.divmod(self.keys, self.scheme.n_instants)
        return self.scheme.T * (n + self.scheme.fractions[idx])

    def grid_coords(self):
        """(n, k, q) per stored sample, with the canonical grid for each instant."""
        n, idx = np.divmod(self.keys, self.scheme.n_instants)
        k_of, q_of = self.scheme.canonical_kq()
        return n, k_of[idx], q_of[idx]

    @classmethod
    def from_grid_coords(cls, scheme: SmrsScheme, n, k, q, values) -> "SampleStore":
        idx = np.array([scheme.grid_map[int(kk)][int(qq)] for kk, qq in zip(k, q)], dtype=np.int64)
        keys = np.asarray(n, dtype=np.int64) * scheme.n_instants + idx
        if len(np.unique(keys)) != len(keys):
            raise ValidationError("duplicate physical instants in sample records")
        return cls(scheme, keys, values)

    @classmethod
    def from_function(cls, scheme: SmrsScheme, func, taus, snr_db: float = np.inf,
                      rng=None) -> "SampleStore":
        keys = np.unique(np.concatenate([plan_block(scheme, t).keys for t in taus]))
        n, idx = np.divmod(keys, scheme.n_instants)
        times = scheme.T * (n + scheme.fractions[idx])
        clean = np.asarray(func(times), dtype=complex)
        if np.isinf(snr_db):
            return cls(scheme, keys, clean, clean)
        from .siggen import add_noise
        return cls(scheme, keys, add_noise(clean, snr_db, rng), clean)


class FunctionSource:
    """Noiseless source evaluating a callable at the requested instants."""

    def __init__(self, func):
        self.func = func

    def sample(self, plan: BlockPlan) -> np.ndarray:
        return np.asarray(self.func(plan.absolute), dtype=complex)


def block_taus(tau0, tau_step, n_blocks: int) -> list[Fraction]:
    t0, st = as_fraction(tau0), as_fraction(tau_step)
    return [t0 + h * st for h in range(n_blocks)]


def owned_grid(tau: float, tau_step: float, out_rate: float) -> np.ndarray:
    """Output instants ``i/out_rate`` in ``[tau - step/2, tau + step/2)``."""
    lo = math.ceil(round((tau - tau_step / 2) * out_rate, 9))
    hi = math.ceil(round((tau + tau_step / 2) * out_rate, 9))
    return np.arange(lo, hi) / out_rate


def stream_reconstruct(scheme: SmrsScheme, system: FoldedSystem, window: WindowSpec,
                       sets: IndexSets, source, tau_step, n_blocks: int, out_rate: float,
                       tau0=0, components=None, threads: int = 1,
                       method: str = "dense") -> Iterator[BlockResult]:
    """Reconstruct consecutive blocks ``tau0 + h*tau_step``, yielded in order.

    Each block owns ``[tau - tau_step/2, tau + tau_step/2)`` of the output
    grid, so the grids of consecutive blocks abut without overlap.
    """
    if not float(as_fraction(tau_step)) <= window.T1 * (1 + 1e-12):
        raise ValidationError("tau_step must not exceed T1")
    taus = block_taus(tau0, tau_step, n_blocks)
    step = float(as_fraction(tau_step))

    def run(tau):
        plan = plan_block(scheme, tau)
        out = owned_grid(plan.tau, step, out_rate)
        return reconstruct_block(plan, system, window, source.sample(plan), out, sets,
                                 components, method)

    if threads <= 1:
        for tau in taus:
            yield run(tau)
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            # map keeps submission order, so emission stays ordered
            yield from ex.map(run, taus)


# -- error bound ---------------------------------------------------------------

@dataclass(frozen=True)
class ErrorBudget:
    A_eta: float                   # l2 norm of sample perturbations in the block
    A_s: tuple[float, ...]         # amplitude bound per component
    epsilon: float                 # bound on the window tail sum
    n_samples: int                 # physical samples per block

    @classmethod
    def from_sigma(cls, sigma: float, A_s, epsilon: float, n_samples: int) -> "ErrorBudget":
        return cls(math.sqrt(n_samples) * sigma, tuple(A_s), epsilon, n_samples)


class BoundEvaluator:
    """Caches the sensitivity forms used by ``error_bound``."""

    def __init__(self, scheme: SmrsScheme, system: FoldedSystem):
        self.scheme, self.system = scheme, system
        self._forms = {}

    def gamma(self, J_sub, t, tau: float = 0.0) -> np.ndarray:
        J_sub = np.asarray(J_sub, dtype=np.int64)
        key = J_sub.tobytes()
        if key not in self._forms:
            self._forms[key] = sensitivity_form(self.system, J_sub, self.scheme)
        return np.sqrt(quadratic_at(self._forms[key], J_sub, t, t0=-tau, T=self.scheme.T))


def error_bound(budget: ErrorBudget, window: WindowSpec, evaluator: BoundEvaluator, J_sub, t,
                tau: float = 0.0, component: int | None = None) -> np.ndarray:
    """Pointwise bound on the reconstruction error at relative instants ``t``.

    ``component=None`` bounds ``z`` (``J_sub = I_zw``); otherwise component
    ``m``.  ``Gamma`` here merges coincident grid points, matching a noise
    norm ``A_eta`` taken over physical samples.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(np.abs(t) > window.T1 / 2 * (1 + 1e-12)):
        raise ValidationError("error bound is only valid within T1/2 of the block center")
    g = evaluator.gamma(J_sub, t, tau)
    w = eval_window(window, t)
    total = float(sum(budget.A_s))
    a_term = total if component is None else float(budget.A_s[component])
    return (budget.A_eta * g
            + budget.epsilon * (total * math.sqrt(budget.n_samples) * g + a_term)) / w
