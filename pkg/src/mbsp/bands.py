"""Multiband spectral support and the windowed frequency-index sets.

A band plan is an ordered list of disjoint bands ``[a_m, b_m]`` (Hz) plus the
block period ``T`` and the window bandwidth ``Bw``.  Windowing widens every
band by ``Bw/2`` on each side; the integer frequencies ``p`` with ``p/T``
inside a widened band form that component's index set.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Band:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.a < self.b:
            raise ValidationError(f"band edges must satisfy a < b, got [{self.a}, {self.b}]")

    @classmethod
    def from_center(cls, fc: float, B: float) -> "Band":
        return cls(fc - B / 2, fc + B / 2)

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def center(self) -> float:
        return 0.5 * (self.a + self.b)


@dataclass(frozen=True)
class MultibandSupport:
    bands: tuple[Band, ...]
    T: float
    Bw: float

    def __post_init__(self):
        object.__setattr__(self, "bands", tuple(self.bands))
        if not self.bands:
            raise ValidationError("band plan has no bands")
        if not self.T > 0 or not self.Bw > 0:
            raise ValidationError("T and Bw must be positive")
        for lo, hi in zip(self.bands, self.bands[1:]):
            if not lo.b < hi.a:
                raise ValidationError(f"bands must be increasing and disjoint: {lo} then {hi}")
            if not self.Bw < hi.a - lo.b:
                raise ValidationError(
                    f"window bandwidth {self.Bw} is not below the gap {hi.a - lo.b} "
                    f"between bands ending at {lo.b} and starting at {hi.a}")

    @property
    def M(self) -> int:
        return len(self.bands)

    @classmethod
    def from_dict(cls, doc: dict) -> "MultibandSupport":
        try:
            bands = [Band.from_center(float(b["fc"]), float(b["B"])) for b in doc["bands"]]
            return cls(tuple(bands), float(doc["T"]), float(doc["Bw"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed band plan: {exc!r}") from exc

    @classmethod
    def load(cls, path) -> "MultibandSupport":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {"T": self.T, "Bw": self.Bw,
                "bands": [{"fc": b.center, "B": b.width} for b in self.bands]}


@dataclass(frozen=True)
class IndexSets:
    """Per-component integer index ranges and their sorted union."""

    per_component: tuple[np.ndarray, ...]
    union: np.ndarray

    @classmethod
    def from_runs(cls, runs) -> "IndexSets":
        per = tuple(np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in runs)
        union = np.concatenate(per) if per else np.zeros(0, dtype=np.int64)
        union = np.unique(union)
        if sum(len(r) for r in per) != len(union):
            raise ValidationError("component index sets overlap")
        return cls(per, union)

    @property
    def runs(self) -> list[tuple[int, int]]:
        return [(int(r[0]), int(r[-1])) for r in self.per_component if len(r)]

    def component_of(self, p: int) -> int:
        for m, r in enumerate(self.per_component):
            if len(r) and r[0] <= p <= r[-1]:
                return m
        raise KeyError(p)

    def to_dict(self) -> dict:
        return {"runs": [list(r) for r in self.runs], "count": int(len(self.union))}

    @classmethod
    def from_dict(cls, doc: dict) -> "IndexSets":
        return cls.from_runs([tuple(r) for r in doc["runs"]])


def expanded_index_sets(support: MultibandSupport) -> IndexSets:
    """Integer ``p`` with ``a_m - Bw/2 <= p/T <= b_m + Bw/2`` for each band.

    Both ends are inclusive, so a widened edge landing exactly on ``p/T``
    keeps that index.
    """
    T, half = support.T, support.Bw / 2
    runs = []
    for band in support.bands:
        lo = math.ceil((band.a - half) * T)
        hi = math.floor((band.b + half) * T)
        runs.append((lo, hi))
    for (_, hi), (lo, _) in zip(runs, runs[1:]):
        if lo <= hi:
            raise ValidationError("windowed bands overlap on the integer frequency grid")
    return IndexSets.from_runs(runs)


@dataclass(frozen=True)
class OccupancyReport:
    landau: float
    windowed_landau: float
    nyquist_span: float

    def ratios(self, sampling_rate: float) -> dict:
        return {"nyquist_over_rate": self.nyquist_span / sampling_rate,
                "rate_over_landau": sampling_rate / self.landau}


def support_metrics(support: MultibandSupport) -> OccupancyReport:
    widths = [b.width for b in support.bands]
    return OccupancyReport(
        landau=float(sum(widths)),
        windowed_landau=float(sum(widths) + support.M * support.Bw),
        # occupied span of the unwidened support
        nyquist_span=float(support.bands[-1].b - support.bands[0].a),
    )
