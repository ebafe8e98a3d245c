"""Test signals: raised-cosine PSK, sums of tones and sinc-pulse trains.

Every generator draws its random parameters from ``numpy.random.Generator``
(PCG64) seeded by ``SignalSpec.seed``; scenario seeds are split into
per-component and noise streams with ``SeedSequence.spawn`` so adding a
component never changes the others.  Signals are scaled to unit peak,
measured on a dense grid (64 points per ``1/B``) over ``horizon``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import ValidationError

KINDS = ("bpsk", "qpsk", "exp_sum", "sinc_train")
POINTS_PER_INV_B = 64
SYMBOL_PAD = 20          # extra symbols (in chip periods) around the horizon
_RC_SING = 1e-8


@dataclass(frozen=True)
class SignalSpec:
    kind: str
    B: float
    fc: float = 0.0
    seed: int = 0
    beta: float = 0.8
    n_tones: int = 150
    n_pulses: int = 200
    T: float = 1.0                          # sinc delays drawn in [-T, T)
    horizon: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown signal kind {self.kind!r}")
        if not self.B > 0:
            raise ValidationError("bandwidth must be positive")
        if self.kind in ("bpsk", "qpsk") and not 0 < self.beta <= 1:
            raise ValidationError("roll-off must lie in (0, 1]")
        if not self.horizon[0] < self.horizon[1]:
            raise ValidationError("horizon must be an increasing pair")

    @property
    def chip_period(self) -> float:
        return (1 + self.beta) / self.B


def raised_cosine(t, Tc: float, beta: float):
    """``pi sinc(t/Tc) cos(pi beta t/Tc) / (1 - (2 beta t/Tc)^2)``; equals pi at 0."""
    x = np.asarray(t, dtype=float) / Tc
    den = 1.0 - (2 * beta * x) ** 2
    sing = np.abs(den) < _RC_SING
    safe = np.where(sing, 1.0, den)
    out = np.pi * np.sinc(x) * np.cos(np.pi * beta * x) / safe
    if np.any(sing):
        # |2 beta x| = 1: cos(pi u/2)/(1-u^2) -> pi/4, sinc at x = 1/(2 beta)
        out = np.where(sing, np.pi * np.sinc(1 / (2 * beta)) * np.pi / 4, out)
    return out


class Signal:
    """A generated, peak-normalized component; call it with instants."""

    def __init__(self, spec: SignalSpec):
        self.spec = spec
        rng = np.random.Generator(np.random.PCG64(spec.seed))
        getattr(self, "_draw_" + ("psk" if spec.kind in ("bpsk", "qpsk") else spec.kind))(rng)
        self.scale = 1.0
        self.scale = 1.0 / self._raw_peak()

    # parameter draws
    def _draw_psk(self, rng):
        s = self.spec
        Tc = s.chip_period
        lo, hi = s.horizon
        self.sym_idx = np.arange(int(np.floor(lo / Tc)) - SYMBOL_PAD,
                                 int(np.ceil(hi / Tc)) + SYMBOL_PAD + 1)
        n = len(self.sym_idx)
        if s.kind == "bpsk":
            self.symbols = rng.choice([-1.0, 1.0], n).astype(complex)
        else:
            self.symbols = rng.choice([-1.0, 1.0], n) + 1j * rng.choice([-1.0, 1.0], n)

    def _draw_exp_sum(self, rng):
        s = self.spec
        self.freqs = rng.uniform(-s.B / 2, s.B / 2, s.n_tones)
        self.phases = rng.uniform(0, 2 * np.pi, s.n_tones)
        self.amps = rng.uniform(0, 1, s.n_tones)

    def _draw_sinc_train(self, rng):
        s = self.spec
        self.delays = rng.uniform(-s.T, s.T, s.n_pulses)
        self.amps = rng.uniform(0, 1, s.n_pulses) * np.exp(1j * rng.uniform(0, 2 * np.pi, s.n_pulses))

    # baseband evaluation
    def _baseband(self, t, chunk: int = 4096):
        s = self.spec
        out = np.empty(len(t), dtype=complex)
        for i in range(0, len(t), chunk):
            tt = t[i:i + chunk, None]
            if s.kind in ("bpsk", "qpsk"):
                Tc = s.chip_period
                g = raised_cosine(tt - self.sym_idx[None, :] * Tc, Tc, s.beta)
                out[i:i + chunk] = g @ self.symbols
            elif s.kind == "exp_sum":
                out[i:i + chunk] = np.exp(1j * (2 * np.pi * self.freqs[None, :] * tt
                                                + self.phases[None, :])) @ self.amps
            else:
                out[i:i + chunk] = np.sinc(s.B * (tt - self.delays[None, :])) @ self.amps
        return out

    def _raw_peak(self) -> float:
        s = self.spec
        lo, hi = s.horizon
        if s.kind in ("bpsk", "qpsk"):
            # grid aligned with the symbol clock so the sum is one convolution
            Tc = s.chip_period
            up = int(np.ceil(POINTS_PER_INV_B * (1 + s.beta)))
            h = Tc / up
            k0 = self.sym_idx[0]
            n_lag = up * (len(self.sym_idx) - 1)
            kern = raised_cosine(np.arange(-n_lag, n_lag + 1) * h, Tc, s.beta)
            train = np.zeros(n_lag + 1, dtype=complex)
            train[::up] = self.symbols
            full = fftconvolve(train, kern)          # index j -> t = k0 Tc + (j - n_lag) h
            t = k0 * Tc + (np.arange(len(full)) - n_lag) * h
            sel = (t >= lo) & (t <= hi)
            return float(np.abs(full[sel]).max())
        n = int(np.ceil((hi - lo) * s.B * POINTS_PER_INV_B)) + 1
        return float(np.abs(self._baseband(np.linspace(lo, hi, n))).max())

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        carrier = np.exp(2j * np.pi * self.spec.fc * t)
        return self.scale * carrier * self._baseband(t)


def gen_psk(spec: SignalSpec, t):
    if spec.kind not in ("bpsk", "qpsk"):
        raise ValidationError("gen_psk needs kind bpsk or qpsk")
    return Signal(spec)(t)


def gen_exp_sum(spec: SignalSpec, t):
    if spec.kind != "exp_sum":
        raise ValidationError("gen_exp_sum needs kind exp_sum")
    return Signal(spec)(t)


def gen_sinc_train(spec: SignalSpec, t):
    if spec.kind != "sinc_train":
        raise ValidationError("gen_sinc_train needs kind sinc_train")
    return Signal(spec)(t)


@dataclass
class Mixture:
    """Sum of components; ``components[m]`` occupies band ``m``."""

    components: list[Signal] = field(default_factory=list)

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros(len(t), dtype=complex)
        for c in self.components:
            out += c(t)
        return out

    def component(self, m: int, t):
        return self.components[m](t)


def add_noise(samples, snr_db: float, rng) -> np.ndarray:
    """Circular complex white Gaussian noise at ``snr_db`` below the sample power."""
    x = np.asarray(samples, dtype=complex)
    if np.isinf(snr_db) and snr_db > 0:
        return x.copy()
    if not isinstance(rng, np.random.Generator):
        rng = np.random.Generator(np.random.PCG64(rng))
    power = np.mean(np.abs(x) ** 2)
    sigma = np.sqrt(power / 10 ** (snr_db / 10) / 2)
    return x + sigma * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))


def spawn_seeds(seed: int, n: int) -> list[int]:
    """Independent child seeds: ``n`` for components plus one for noise."""
    children = np.random.SeedSequence(seed).spawn(n + 1)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]
