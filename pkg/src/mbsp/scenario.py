"""Scenario documents: one JSON file drives every CLI pipeline.

A scenario names the band plan, the window, the sampling scheme (or how to
design one), the test signals, the noise level and the block schedules::

    {
      "name": "five-band",
      "seed": 0,
      "band_plan": {"T": 1, "Bw": 9.12, "bands": [{"fc": 308.892, "B": 60.4428}]},
      "window": {"T1": 0.5, "delta": null},
      "scheme": {"moduli": [11, 18, 19], "t0": 0.0},
      "design": {"K": 4, "candidates": [2, 67], "target_db": 19.0, "max_added": 5},
      "signals": [{"kind": "qpsk", "band": 0, "beta": 0.8}],
      "noise": {"snr_db": 70},
      "blocks": {"tau0": 0, "tau_step": 0.5, "count": 1, "out_rate": 1000},
      "outputs": {"components": [0]},
      "blind": {"blocks": 500, "tau_step": 0.1, "subspace_dim": "auto",
                "candidate_range": [0, 1600], "min_width": 3}
    }

Only ``band_plan`` is always required; each subcommand checks the sections
it needs.  Signal ``fc`` and ``B`` default to the referenced band.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

import numpy as np

from .bands import MultibandSupport
from .errors import ValidationError
from .reconstruct import as_fraction
from .scheme import SmrsScheme, build_scheme
from .siggen import KINDS, Mixture, Signal, SignalSpec, spawn_seeds
from .window import WindowSpec, design_window

SHIPPED = ("single_band", "five_band", "blind_five_band")


@dataclass
class Scenario:
    doc: dict
    support: MultibandSupport
    seed: int = 0
    name: str = "scenario"

    @classmethod
    def from_dict(cls, doc: dict, seed: int | None = None) -> "Scenario":
        if not isinstance(doc, dict) or "band_plan" not in doc:
            raise ValidationError("scenario needs a 'band_plan' section")
        doc = copy.deepcopy(doc)
        if seed is not None:
            doc["seed"] = int(seed)
        support = MultibandSupport.from_dict(doc["band_plan"])
        for i, sig in enumerate(doc.get("signals", [])):
            if sig.get("kind") not in KINDS:
                raise ValidationError(f"signal {i}: kind must be one of {KINDS}")
            m = sig.get("band")
            if not isinstance(m, int) or not 0 <= m < support.M:
                raise ValidationError(f"signal {i}: 'band' must index the band plan (0..{support.M - 1})")
        return cls(doc, support, int(doc.get("seed", 0)), str(doc.get("name", "scenario")))

    @classmethod
    def load(cls, path, seed: int | None = None) -> "Scenario":
        from .io import read_json
        return cls.from_dict(read_json(path), seed)

    @classmethod
    def shipped(cls, name: str, seed: int | None = None) -> "Scenario":
        if name not in SHIPPED:
            raise ValidationError(f"unknown shipped scenario {name!r}; choose from {SHIPPED}")
        import json
        text = resources.files("mbsp.scenarios").joinpath(f"{name}.json").read_text()
        return cls.from_dict(json.loads(text), seed)

    def section(self, key: str) -> dict:
        if key not in self.doc:
            raise ValidationError(f"scenario lacks a '{key}' section")
        return self.doc[key]

    @property
    def T(self) -> float:
        return self.support.T

    def window(self) -> WindowSpec:
        w = self.section("window")
        return design_window(self.support.Bw, self.T, float(w.get("T1", self.T / 2)),
                             w.get("delta"))

    def scheme(self) -> SmrsScheme:
        s = self.section("scheme")
        if "moduli" not in s:
            raise ValidationError("scheme section needs 'moduli'")
        return build_scheme(s["moduli"], float(s.get("t0", 0.0)), self.T)

    def has_scheme(self) -> bool:
        return "moduli" in self.doc.get("scheme", {})

    # block schedules
    def blocks(self) -> dict:
        b = dict(self.section("blocks"))
        b.setdefault("tau0", 0)
        b.setdefault("count", 1)
        b.setdefault("tau_step", self.doc.get("window", {}).get("T1", self.T / 2))
        b.setdefault("out_rate", 1000.0)
        return b

    def block_taus(self) -> list[Fraction]:
        b = self.blocks()
        t0, st = as_fraction(b["tau0"]), as_fraction(b["tau_step"])
        return [t0 + h * st for h in range(int(b["count"]))]

    def blind(self) -> dict:
        b = dict(self.section("blind"))
        b.setdefault("blocks", 500)
        b.setdefault("tau_step", self.T / 10)
        b.setdefault("tau0", 0)
        b.setdefault("subspace_dim", "auto")
        b.setdefault("min_width", 3)
        return b

    def blind_taus(self) -> list[Fraction]:
        b = self.blind()
        t0, st = as_fraction(b["tau0"]), as_fraction(b["tau_step"])
        return [t0 + h * st for h in range(int(b["blocks"]))]

    @property
    def snr_db(self) -> float:
        v = self.doc.get("noise", {}).get("snr_db")
        return np.inf if v is None else float(v)

    # signals
    def seeds(self) -> list[int]:
        """Component seeds followed by the noise seed."""
        return spawn_seeds(self.seed, len(self.doc.get("signals", [])))

    def mixture(self, taus) -> Mixture:
        sigs = self.doc.get("signals", [])
        if not sigs:
            raise ValidationError("scenario has no signals to generate")
        seeds = self.seeds()
        lo = float(min(taus)) - self.T
        hi = float(max(taus)) + self.T
        comps = []
        for m, sig in enumerate(sigs):
            band = self.support.bands[sig["band"]]
            kw = {k: sig[k] for k in ("beta", "n_tones", "n_pulses") if k in sig}
            horizon = tuple(sig.get("horizon", (lo, hi)))
            comps.append(Signal(SignalSpec(sig["kind"], float(sig.get("B", band.width)),
                                           float(sig.get("fc", band.center)), seeds[m],
                                           T=self.T, horizon=horizon, **kw)))
        return Mixture(comps)

    def component_bands(self) -> list[int]:
        return [int(s["band"]) for s in self.doc.get("signals", [])]
