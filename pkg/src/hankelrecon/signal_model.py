"""Damped complex exponential signals, reference test signals and noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PeakParams:
    """One damped complex sinusoid.

    ``damping`` is the decay constant in samples, ``frequency`` is in
    normalized cycles per sample and ``phase`` in radians.
    """

    amplitude: float
    damping: float
    frequency: float
    phase: float

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if not self.damping > 0:
            raise ValueError(f"damping must be positive, got {self.damping}")
        if not 0.0 <= self.frequency < 1.0:
            raise ValueError(f"frequency must lie in [0, 1), got {self.frequency}")
        if not 0.0 <= self.phase < TWO_PI:
            raise ValueError(f"phase must lie in [0, 2*pi), got {self.phase}")


@dataclass(frozen=True)
class ExponentialModel:
    peaks: tuple[PeakParams, ...] = ()
    sample_interval: float = 1.0
    length: int = 255

    def __post_init__(self):
        object.__setattr__(self, "peaks", tuple(self.peaks))
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")

    def without(self, index: int) -> "ExponentialModel":
        peaks = self.peaks[:index] + self.peaks[index + 1:]
        return ExponentialModel(peaks, self.sample_interval, self.length)


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "gaussian"
    scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.scale < 0:
            raise ValueError("noise scale must be non-negative")

    def metadata(self) -> dict:
        return {
            "kind": self.kind,
            "scale": self.scale,
            "seed": self.seed,
            "convention": "real and imaginary parts i.i.d., each with the given scale",
        }


def synthesize(model: ExponentialModel) -> np.ndarray:
    """Sum of the model's peaks sampled at ``n * sample_interval``, n = 0..N-1."""
    t = np.arange(model.length) * model.sample_interval
    x = np.zeros(model.length, dtype=complex)
    for pk in model.peaks:
        x += (pk.amplitude * np.exp(1j * pk.phase)) * np.exp(-t / pk.damping + 1j * TWO_PI * pk.frequency * t)
    return x


_TABLE_DAMPING = (50.0, 75.0, 100.0, 125.0, 150.0)
_TABLE_PHASE_PI = (0.4, 0.8, 1.2, 1.6, 2.0)
_TABLE_FREQ = (0.165, 0.333, 0.498, 0.667, 0.831)
_TABLE_AMPLITUDES = {
    "S1": (0.300, 0.475, 0.650, 0.825, 1.000),
    "S2": (0.100, 0.325, 0.550, 0.775, 1.000),
}
TABLE_NOISE_STD = 0.03


def table_signal(which: str = "S2") -> ExponentialModel:
    """Five-peak reference signals; ``S1`` and ``S2`` differ only in amplitudes.

    A phase of 2*pi is stored as 0, which is the same sinusoid.
    """
    try:
        amps = _TABLE_AMPLITUDES[which.upper()]
    except KeyError:
        raise ValueError(f"unknown table signal {which!r}; expected 'S1' or 'S2'") from None
    peaks = tuple(
        PeakParams(a, tau, f, math.fmod(ph * math.pi, TWO_PI))
        for a, tau, ph, f in zip(amps, _TABLE_DAMPING, _TABLE_PHASE_PI, _TABLE_FREQ)
    )
    return ExponentialModel(peaks, 1.0, 255)


@dataclass(frozen=True)
class TrainingRanges:
    """Uniform sampling ranges of randomly drawn training signals."""

    n_peaks: tuple[int, int] = (1, 10)
    frequency: tuple[float, float] = (0.0, 1.0)
    phase: tuple[float, float] = (0.0, TWO_PI)
    amplitude: tuple[float, float] = (0.05, 1.00)
    damping: tuple[float, float] = (10.00, 179.20)
    noise_std: tuple[float, float] = (0.0, 0.04)
    length: int = 255
    sample_interval: float = 1.0

    def __post_init__(self):
        for name in ("n_peaks", "frequency", "phase", "amplitude", "damping", "noise_std"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"invalid range for {name}: min {lo} > max {hi}")
        if self.n_peaks[0] < 0:
            raise ValueError("n_peaks minimum must be >= 0")


def _uniform_half_open(rng, lo, hi):
    # frequency and phase are half-open intervals; guard the float edge case
    v = rng.uniform(lo, hi)
    return lo if v >= hi else v


def sample_training_model(ranges: TrainingRanges | None = None, rng=None) -> ExponentialModel:
    """Draw one random model with every parameter uniform over ``ranges``."""
    ranges = ranges or TrainingRanges()
    rng = np.random.default_rng(rng)
    g = int(rng.integers(ranges.n_peaks[0], ranges.n_peaks[1] + 1))
    peaks = []
    for _ in range(g):
        freq = _uniform_half_open(rng, *ranges.frequency)
        phase = _uniform_half_open(rng, *ranges.phase)
        amp = rng.uniform(*ranges.amplitude)
        tau = rng.uniform(*ranges.damping)
        peaks.append(PeakParams(amp, tau, freq, phase))
    return ExponentialModel(tuple(peaks), ranges.sample_interval, ranges.length)


def sample_noise_std(ranges: TrainingRanges | None = None, rng=None) -> float:
    """One noise level per training signal."""
    ranges = ranges or TrainingRanges()
    return float(np.random.default_rng(rng).uniform(*ranges.noise_std))


def noise(shape, spec: NoiseSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "gaussian":
        re = rng.normal(0.0, spec.scale, shape) if spec.scale > 0 else np.zeros(shape)
        im = rng.normal(0.0, spec.scale, shape) if spec.scale > 0 else np.zeros(shape)
    else:
        re = rng.uniform(-spec.scale, spec.scale, shape)
        im = rng.uniform(-spec.scale, spec.scale, shape)
    return re + 1j * im


def add_noise(x, spec: NoiseSpec) -> np.ndarray:
    """Return ``x`` plus complex noise drawn per ``spec``."""
    x = np.asarray(x, dtype=complex)
    if spec.scale == 0:
        return x.copy()
    return x + noise(x.shape, spec)


def rng_state(seed: int) -> dict:
    """Serializable state of the generator used for ``seed``."""
    return np.random.default_rng(seed).bit_generator.state
