"""Folding, the sparse congruence system and reconstruction kernels.

Samples of a sparse trigonometric polynomial

    alpha(t) = sum_{p in J} beta_p exp(j 2 pi p t / T)

on grid ``k`` (``Q_k`` points from ``t0``) fold under a scaled DFT into

    Lambda_{k,r} = sum_{p in J, p = r mod Q_k} delta_p,    delta_p = beta_p exp(j 2 pi p t0/T)

a 0/1 linear system with one row per residue ``(k, r)``.  Rows of grid ``k``
carry noise variance ``sigma^2/Q_k`` when the samples carry ``sigma^2``, so the
system is solved in the ``Q_k``-weighted least-squares sense; this is the
same solution as least squares on the raw samples over all ``(k, q)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import lsqr

from .errors import RankDeficientError, ValidationError
from .scheme import SmrsScheme

RCOND = 1e-10


def _dft(Q: int) -> np.ndarray:
    q = np.arange(Q)
    return np.exp(-2j * np.pi * np.outer(q, q) / Q)


@dataclass(frozen=True)
class FoldedSystem:
    moduli: tuple[int, ...]
    cols: np.ndarray              # sorted index set J
    matrix: np.ndarray            # dense 0/1, rows (k, r) row-major
    weights: np.ndarray           # Q_k per row
    rank: int
    pinv: np.ndarray | None       # |J| x rows, weighted pseudo-inverse
    gram_inv: np.ndarray | None   # (M^T W M)^-1, |J| x |J|

    @property
    def rank_ok(self) -> bool:
        return self.pinv is not None

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.moduli)])

    @property
    def density(self) -> float:
        return float(self.matrix.sum() / self.matrix.size)

    def incidence(self, row: int) -> np.ndarray:
        return np.flatnonzero(self.matrix[row])

    def positions(self, J_sub) -> np.ndarray:
        """Column positions of ``J_sub`` inside ``cols``."""
        J_sub = np.asarray(J_sub, dtype=np.int64)
        pos = np.searchsorted(self.cols, J_sub)
        ok = (pos < len(self.cols))
        ok[ok] = self.cols[pos[ok]] == J_sub[ok]
        if not np.all(ok):
            raise ValidationError("J_sub is not a subset of the system's index set")
        return pos

    def require_rank(self):
        if not self.rank_ok:
            raise RankDeficientError(
                f"folded system has rank {self.rank} < {len(self.cols)} columns")

    def sparse_matrix(self):
        return sp.csr_matrix(self.matrix)


@dataclass(frozen=True)
class FoldedData:
    lambda_kr: np.ndarray   # complex, one value per row (k, r)


@dataclass(frozen=True)
class CoefficientVector:
    cols: np.ndarray
    delta_p: np.ndarray
    beta_p: np.ndarray


def congruence_matrix(moduli, J) -> np.ndarray:
    J = np.asarray(J, dtype=np.int64)
    rows = []
    for Q in moduli:
        res = np.mod(J, Q)
        block = np.zeros((Q, len(J)))
        block[res, np.arange(len(J))] = 1.0
        rows.append(block)
    return np.vstack(rows)


def build_folded_system(moduli, J) -> FoldedSystem:
    """Assemble the congruence system for index set ``J`` and pseudo-invert it.

    ``moduli`` may be a scheme or a sequence of integers.
    """
    if isinstance(moduli, SmrsScheme):
        moduli = moduli.moduli
    moduli = tuple(int(Q) for Q in moduli)
    J = np.unique(np.asarray(J, dtype=np.int64))
    if len(J) == 0:
        raise ValidationError("index set J is empty")
    M = congruence_matrix(moduli, J)
    w = np.repeat(np.asarray(moduli, dtype=float), moduli)
    sw = np.sqrt(w)
    U, s, Vt = np.linalg.svd(sw[:, None] * M, full_matrices=False)
    keep = s > RCOND * s[0]
    rank = int(keep.sum())
    pinv = gram_inv = None
    if rank == len(J):
        # pinv of the weighted matrix, then undo the row scaling
        pinv = (Vt.T / s) @ U.T * sw[None, :]
        gram_inv = (Vt.T / s ** 2) @ Vt
    return FoldedSystem(moduli, J, M, w, rank, pinv, gram_inv)


def fold_samples(scheme: SmrsScheme, samples) -> FoldedData:
    """Scaled per-grid DFT of samples given once per physical instant."""
    x = np.asarray(samples, dtype=complex)
    if x.shape != (scheme.n_instants,):
        raise ValidationError(
            f"expected {scheme.n_instants} samples, got shape {x.shape}")
    return fold_grid_values(scheme.moduli, [x[idx] for idx in scheme.grid_map])


def fold_grid_values(moduli, per_grid) -> FoldedData:
    parts = [(_dft(Q) @ np.asarray(v, dtype=complex)) / Q for Q, v in zip(moduli, per_grid)]
    return FoldedData(np.concatenate(parts))


def solve_coefficients(system: FoldedSystem, data: FoldedData, t0: float = 0.0,
                       T: float = 1.0, method: str = "dense",
                       t0_over_T=None) -> CoefficientVector:
    """Least-squares coefficients from folded data.

    ``method="lsqr"`` runs the sparse iterative solver on the weighted system
    instead of multiplying by the stored pseudo-inverse.  ``t0_over_T`` may
    carry the base instant as an exact fraction, which keeps the phase
    rotation accurate for large ``p``.
    """
    system.require_rank()
    lam = np.asarray(data.lambda_kr, dtype=complex)
    if lam.shape != (system.n_rows,):
        raise ValidationError("folded data does not match the system's rows")
    if method == "dense":
        delta = system.pinv @ lam
    elif method == "lsqr":
        sw = np.sqrt(system.weights)
        A = sp.diags(sw) @ system.sparse_matrix()
        b = sw * lam
        kw = dict(atol=1e-14, btol=1e-14, conlim=1e12, iter_lim=20 * len(system.cols))
        delta = lsqr(A, b.real, **kw)[0] + 1j * lsqr(A, b.imag, **kw)[0]
    else:
        raise ValidationError(f"unknown solve method {method!r}")
    beta = delta * np.conj(phase(system.cols, t0, T, t0_over_T))
    return CoefficientVector(system.cols, delta, beta)


def phase(p, t, T=1.0, t_over_T=None) -> np.ndarray:
    """``exp(j 2 pi p t / T)`` with the product reduced modulo 1 when exact."""
    p = np.asarray(p, dtype=np.int64)
    if t_over_T is not None:
        num, den = t_over_T.numerator, t_over_T.denominator
        frac = np.array([(int(pi) * num) % den for pi in p], dtype=float) / den
        return np.exp(2j * np.pi * frac)
    return np.exp(2j * np.pi * p * (t / T))


def kernel_matrix(system: FoldedSystem, J_sub=None) -> np.ndarray:
    """Coefficients of every kernel: ``K[p, (k,q)]`` so that

    theta_{k,q}(t) = sum_p K[p, (k,q)] exp(j 2 pi p (t - t0)/T).
    """
    system.require_rank()
    pos = np.arange(len(system.cols)) if J_sub is None else system.positions(J_sub)
    lam = system.pinv[pos]
    off = system.offsets
    blocks = [lam[:, off[k]:off[k + 1]] @ _dft(Q) / Q for k, Q in enumerate(system.moduli)]
    return np.hstack(blocks)


def kernel_eval(system: FoldedSystem, J_sub, t, t0: float = 0.0, T: float = 1.0) -> np.ndarray:
    """Kernel values ``theta_{k,q}(t; J_sub, t0)``, shape ``(len(t), sum Q_k)``."""
    J_sub = system.cols if J_sub is None else np.asarray(J_sub, dtype=np.int64)
    K = kernel_matrix(system, J_sub)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    E = np.exp(2j * np.pi * np.outer((t - t0) / T, J_sub))
    return E @ K


def evaluate_poly(cols, coef, t, T: float = 1.0) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.exp(2j * np.pi * np.outer(t / T, cols)) @ coef


def sensitivity_form(system: FoldedSystem, J_sub=None, scheme: SmrsScheme | None = None):
    """Hermitian matrix ``A`` with ``Gamma(t)^2 = e(t)^H A e(t)``.

    ``e(t)_p = exp(j 2 pi p (t - t0)/T)`` over ``J_sub``.  With ``scheme``
    given, kernels of coincident grid points are summed first, so the form
    measures noise on physical samples rather than on (k, q) pairs.
    """
    system.require_rank()
    pos = np.arange(len(system.cols)) if J_sub is None else system.positions(J_sub)
    if scheme is None:
        return system.gram_inv[np.ix_(pos, pos)].astype(complex)
    K = kernel_matrix(system, system.cols[pos])
    merged = np.zeros((K.shape[0], scheme.n_instants), dtype=complex)
    np.add.at(merged.T, scheme.flat_map, K.T)
    return merged @ merged.conj().T


def quadratic_on_grid(A: np.ndarray, J, n_grid: int, T: float = 1.0):
    """``e(t)^H A e(t)`` on the grid ``t = -T/2 + i T/n_grid``, via one FFT."""
    J = np.asarray(J, dtype=np.int64)
    diff = J[None, :] - J[:, None]
    # the -T/2 shift turns exp(j 2 pi d t/T) into (-1)^d exp(j 2 pi d i/n_grid)
    signed = A * np.where(diff % 2 == 0, 1.0, -1.0)
    coef = np.zeros(n_grid, dtype=complex)
    np.add.at(coef, np.mod(diff, n_grid).ravel(), signed.ravel())
    vals = np.fft.ifft(coef) * n_grid
    t = -T / 2 + T * np.arange(n_grid) / n_grid
    return t, np.maximum(vals.real, 0.0)


def quadratic_at(A: np.ndarray, J, t, t0: float = 0.0, T: float = 1.0) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    E = np.exp(2j * np.pi * np.outer((t - t0) / T, np.asarray(J)))
    return np.maximum(np.einsum("ip,pq,iq->i", E.conj(), A, E).real, 0.0)


def fit_trig_poly(instants, values, J, T: float = 1.0) -> np.ndarray:
    """Least-squares coefficients of ``sum_{p in J} c_p exp(j 2 pi p t/T)`` at arbitrary instants."""
    E = np.exp(2j * np.pi * np.outer(np.asarray(instants, dtype=float) / T, np.asarray(J)))
    coef, _, rank, _ = np.linalg.lstsq(E, np.asarray(values, dtype=complex), rcond=None)
    if rank < len(J):
        raise RankDeficientError(f"fit has rank {rank} < {len(J)}")
    return coef
