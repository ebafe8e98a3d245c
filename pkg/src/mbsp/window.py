"""Band-limited window with Kaiser-Bessel transform shape.

The window is

    w(t) = sinc(delta*Bw*t) * sinc((1-delta)*Bw*sqrt(t^2 - rho^2 T^2/4))
           / sinc(j*(1-delta)*rho*Bw*T/2),      rho = sqrt(1 - 1/(Bw T)^2)

with ``sinc(x) = sin(pi x)/(pi x)`` and ``sinc(j x) = sinh(pi x)/(pi x)``.  Its
spectrum lies in ``[-Bw/2, Bw/2]``, it equals one at ``t = 0`` and its
periodic copies ``w(t + pT)``, ``p != 0``, are tiny inside ``[-T/2, T/2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import polygamma

from .errors import ValidationError

# above this argument sinh(z)/z is handled as z - log(2z)
_LOG_SWITCH = 30.0
_DELTA_MIN, _DELTA_MAX = 1e-6, 0.5


def optimal_delta(BwT: float) -> float:
    """Fitted shape parameter for a given ``Bw*T``, clamped to (1e-6, 0.5)."""
    d = 0.03326 - 0.002084 * BwT + 0.3737e-4 * BwT ** 2
    return float(min(max(d, _DELTA_MIN), _DELTA_MAX))


def epsilon_fit(BwT: float) -> float:
    """Fitted tail-sum level ``10**(1.086 - 0.6676 Bw T)``."""
    return float(10.0 ** (1.086 - 0.6676 * BwT))


def _log_sinhc(x):
    """log(sinh(pi x)/(pi x)) for x >= 0, finite for any x."""
    z = np.pi * np.asarray(x, dtype=float)
    out = np.zeros_like(z)
    big = z > _LOG_SWITCH
    out[big] = z[big] - np.log(2.0 * z[big])
    mid = (~big) & (z > 1e-4)
    out[mid] = np.log(np.sinh(z[mid]) / z[mid])
    small = (~big) & (~mid)
    z2 = z[small] ** 2
    out[small] = z2 / 6 - z2 ** 2 / 180
    return out


@dataclass(frozen=True)
class WindowSpec:
    Bw: float
    T: float
    T1: float
    delta: float
    rho: float
    epsilon: float
    delta_w: float
    C: float

    @property
    def BwT(self) -> float:
        return self.Bw * self.T

    def __call__(self, t):
        return eval_window(self, t)

    def to_dict(self) -> dict:
        return {"Bw": self.Bw, "T": self.T, "T1": self.T1, "delta": self.delta,
                "rho": self.rho, "epsilon": self.epsilon, "delta_w": self.delta_w,
                "C": self.C}


def _log_den(Bw, T, delta, rho):
    return float(_log_sinhc((1 - delta) * rho * Bw * T / 2))


def design_window(Bw: float, T: float, T1: float, delta: float | None = None) -> WindowSpec:
    """Build a window for bandwidth ``Bw``, period ``T`` and accurate span ``T1``.

    ``delta`` defaults to the fitted optimum for ``Bw*T``; pass it explicitly
    to reproduce runs that used another value.
    """
    BwT = Bw * T
    if not BwT > 1:
        raise ValidationError(f"Bw*T must exceed 1, got {BwT}")
    if not 0 < T1 < T:
        raise ValidationError(f"need 0 < T1 < T, got T1={T1}, T={T}")
    if delta is None:
        delta = optimal_delta(BwT)
    if not 0 < delta < 1:
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")
    rho = float(np.sqrt(1 - 1 / BwT ** 2))
    log_C = -_log_den(Bw, T, delta, rho) - np.log(np.pi ** 2 * delta * (1 - delta) * Bw ** 2)
    spec = WindowSpec(Bw=float(Bw), T=float(T), T1=float(T1), delta=float(delta), rho=rho,
                      epsilon=epsilon_fit(BwT), delta_w=np.nan, C=float(np.exp(log_C)))
    return replace(spec, delta_w=_window_floor(spec))


def eval_window(spec: WindowSpec, t):
    """Window value at ``t`` (scalar or array); real and even."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    Bw, T, d, rho = spec.Bw, spec.T, spec.delta, spec.rho
    log_den = _log_den(Bw, T, d, rho)
    first = np.sinc(d * Bw * t)
    u = t * t - (rho * T / 2) ** 2
    out = np.empty_like(t)
    inner = u < 0
    # imaginary argument: hyperbolic branch, ratio taken in log domain
    out[inner] = first[inner] * np.exp(_log_sinhc((1 - d) * Bw * np.sqrt(-u[inner])) - log_den)
    outer = ~inner
    out[outer] = first[outer] * np.sinc((1 - d) * Bw * np.sqrt(u[outer])) * np.exp(-log_den)
    return out[0] if scalar else out


def _window_floor(spec: WindowSpec, n_grid: int = 4096) -> float:
    """Infimum of w over |t| <= T1/2: grid search, then bounded refinement."""
    half = spec.T1 / 2
    grid = np.linspace(0.0, half, n_grid)
    vals = eval_window(spec, grid)
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
    best = float(vals[i])
    if hi > lo:
        res = minimize_scalar(lambda x: float(eval_window(spec, x)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-10 * max(half, 1e-300)})
        best = min(best, float(res.fun))
    return best


def trigamma(a):
    return polygamma(1, a)


def series_bound(a, b):
    """Upper bound ``psi'(a) / sqrt(1 - (b/a)^2)`` on sum_n 1/((a+n) sqrt((a+n)^2 - b^2))."""
    a = np.asarray(a, dtype=float)
    return trigamma(a) / np.sqrt(1 - (b / a) ** 2)


def series_sum(a: float, b: float, n_terms: int = 1_000_000) -> float:
    """Direct partial sum of the same series, for checking ``series_bound``."""
    x = a + np.arange(n_terms, dtype=float)
    return float(np.sum(1.0 / (x * np.sqrt(x * x - b * b))))


def tail_bound(spec: WindowSpec, t):
    """Analytic upper bound on ``sum_{p != 0} |w(t + pT)|`` for ``|t| <= T/2``."""
    t = np.asarray(t, dtype=float)
    T = spec.T
    if np.any(np.abs(t) > T / 2 * (1 + 1e-12)):
        raise ValidationError("tail_bound needs |t| <= T/2")
    near = np.abs(eval_window(spec, t - T)) + np.abs(eval_window(spec, t + T))
    far = spec.C / T ** 2 * (series_bound(2 - t / T, spec.rho / 2)
                             + series_bound(2 + t / T, spec.rho / 2))
    return near + far


def tail_sum(spec: WindowSpec, t, p_max: int = 10_000):
    """Brute-force ``sum_{1 <= |p| <= p_max} |w(t + pT)|``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    p = np.concatenate([np.arange(-p_max, 0), np.arange(1, p_max + 1)]).astype(float)
    out = np.array([np.abs(eval_window(spec, ti + p * spec.T)).sum() for ti in t])
    return out


def envelope(spec: WindowSpec, t):
    """``C / (|t| sqrt(t^2 - rho^2 T^2/4))``, valid for |t| > rho T/2."""
    t = np.abs(np.asarray(t, dtype=float))
    return spec.C / (t * np.sqrt(t * t - (spec.rho * spec.T / 2) ** 2))


def certified_epsilon(spec: WindowSpec, n_grid: int = 2049) -> float:
    """Max of ``tail_bound`` over a grid on [-T/2, T/2] (endpoints included).

    Unlike ``spec.epsilon`` (a fitted level) this is a rigorous bound on the
    tail sum at the grid points; the tail is largest at the interval edges.
    """
    t = np.linspace(-spec.T / 2, spec.T / 2, n_grid)
    return float(np.max(tail_bound(spec, t)))
