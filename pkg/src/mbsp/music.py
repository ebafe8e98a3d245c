"""Blind support estimation with the MUSIC subspace spectrum.

Blocks centred at different ``tau_h`` that see the same set of relative
instants ``t_n`` give windowed samples

    A[n, h] = sum_{p in J} beta_{h,p} exp(j 2 pi p t_n / T) + noise,

so the columns of ``A`` span (up to noise) the range of the steering vectors
``phi(p)`` with ``p`` in the unknown support ``J``.  The normalized MUSIC
spectrum ``chi(p) = |phi(p)|^2 / |U_r^H phi(p)|^2`` is large exactly there.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bands import IndexSets, MultibandSupport, expanded_index_sets
from .errors import ValidationError
from .reconstruct import plan_block
from .scheme import SmrsScheme
from .window import WindowSpec, eval_window

THRESHOLD_FLOOR_DB = 10.0
THRESHOLD_FRACTION = 0.25
MIN_RUN_WIDTH = 3
_CHUNK = 2048


@dataclass(frozen=True)
class DataMatrix:
    A: np.ndarray                   # N x H windowed block samples
    instants: np.ndarray            # shared relative instants t_n, seconds
    T: float
    candidate_range: tuple[int, int]

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def H(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class MusicResult:
    candidates: np.ndarray
    spectrum: np.ndarray            # chi(p), linear
    subspace_dim: int
    singular_values: np.ndarray
    estimated_support: list[int] | None = None

    @property
    def spectrum_db(self) -> np.ndarray:
        return 10.0 * np.log10(self.spectrum)


def assemble_data(scheme: SmrsScheme, window: WindowSpec, source, taus,
                  candidate_range=None) -> DataMatrix:
    """Stack windowed blocks as columns, rows ordered by relative instant.

    Every block must see exactly the same relative instants; this holds when
    the ``tau_h`` differ by multiples of ``T/g`` with ``g`` dividing every
    modulus.
    """
    taus = list(taus)
    if not taus:
        raise ValidationError("at least one block center is required")
    ref = None
    cols = []
    for tau in taus:
        plan = plan_block(scheme, tau)
        exact = plan.exact_rel()
        order = sorted(range(len(exact)), key=exact.__getitem__)
        key = [exact[i] for i in order]
        if ref is None:
            ref = key
        elif key != ref:
            raise ValidationError(
                f"block at tau={float(plan.tau)!r} does not share the relative instants of the first block")
        x = np.asarray(source.sample(plan), dtype=complex)
        cols.append((x * eval_window(window, plan.rel))[order])
    instants = scheme.T * np.array([float(f) for f in ref])
    if candidate_range is None:
        candidate_range = (0, scheme.L - 1)
    lo, hi = (int(v) for v in candidate_range)
    if hi < lo:
        raise ValidationError("candidate range must satisfy P1 <= P2")
    return DataMatrix(np.column_stack(cols), instants, scheme.T, (lo, hi))


def _steering(instants, T, p) -> np.ndarray:
    # N x len(p); reduce p*t/T modulo 1 before the exponential to keep phases accurate
    x = np.mod(np.outer(instants / T, p), 1.0)
    return np.exp(2j * np.pi * x)


def music_spectrum(data: DataMatrix, P: int, candidates=None, threads: int = 1) -> MusicResult:
    """Normalized MUSIC spectrum over the candidate indices.

    The noise subspace is spanned by the ``N - P`` left singular vectors of
    ``A`` with the smallest singular values.
    """
    N = data.N
    if not 0 <= P < N:
        raise ValidationError(f"subspace dimension P={P} must satisfy 0 <= P < N={N}")
    if candidates is None:
        candidates = np.arange(data.candidate_range[0], data.candidate_range[1] + 1)
    candidates = np.asarray(candidates, dtype=np.int64)
    U, s, _ = np.linalg.svd(data.A, full_matrices=True)
    Ur = U[:, P:]

    def chunk(i):
        phi = _steering(data.instants, data.T, candidates[i:i + _CHUNK])
        proj = np.sum(np.abs(Ur.conj().T @ phi) ** 2, axis=0)
        return N / np.maximum(proj, np.finfo(float).tiny)

    starts = range(0, len(candidates), _CHUNK)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        chi = np.concatenate(list(ex.map(chunk, starts))) if len(candidates) else np.zeros(0)
    return MusicResult(candidates, chi, int(P), s)


def threshold_db(spectrum_db) -> float:
    med = float(np.median(spectrum_db))
    return med + max(THRESHOLD_FLOOR_DB, THRESHOLD_FRACTION * (float(np.max(spectrum_db)) - med))


def estimate_support(result: MusicResult, bands_model: MultibandSupport | None = None,
                     min_width: int = MIN_RUN_WIDTH) -> IndexSets:
    """Threshold the spectrum and keep contiguous runs of at least ``min_width``.

    With ``bands_model`` given, each detected run is assigned to the band
    whose expanded index set it overlaps most; runs touching no band are
    dropped.  The result may be empty.
    """
    if len(result.spectrum) == 0:
        return IndexSets((), np.zeros(0, dtype=np.int64))
    db = result.spectrum_db
    hit = db > threshold_db(db)
    p = result.candidates
    runs = []
    i = 0
    while i < len(p):
        if not hit[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(p) and hit[j + 1] and p[j + 1] == p[j] + 1:
            j += 1
        if p[j] - p[i] + 1 >= min_width:
            runs.append((int(p[i]), int(p[j])))
        i = j + 1
    if bands_model is None:
        return IndexSets.from_runs(runs)
    truth = expanded_index_sets(bands_model).per_component
    groups = [[] for _ in truth]
    for a, b in runs:
        span = np.arange(a, b + 1)
        overlap = [len(np.intersect1d(span, t)) for t in truth]
        m = int(np.argmax(overlap))
        if overlap[m]:
            groups[m].append(span)
    per = tuple(np.concatenate(g) if g else np.zeros(0, dtype=np.int64) for g in groups)
    union = np.unique(np.concatenate(per)) if per else np.zeros(0, dtype=np.int64)
    return IndexSets(per, union)


def shared_step(scheme: SmrsScheme) -> Fraction:
    """Smallest block spacing (in seconds, exact) that preserves relative instants."""
    g = 0
    for Q in scheme.moduli:
        g = np.gcd(g, Q)
    return Fraction(scheme.T).limit_denominator(10 ** 9) / int(g)
