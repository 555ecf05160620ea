"""Undersampling patterns and the sampling / zero-filling operators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("poisson_gap", "cartesian_1d", "uniform_random", "full")


@dataclass(frozen=True, eq=False)
class SamplingPattern:
    """Sorted sample positions ``omega`` out of ``n_total``, plus provenance."""

    omega: np.ndarray
    n_total: int
    seed: int = 0
    kind: str = "full"

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=np.int64)
        if omega.ndim != 1:
            raise ValueError("omega must be one-dimensional")
        if omega.size and (omega[0] < 0 or omega[-1] >= self.n_total):
            raise ValueError(f"sample indices must lie in [0, {self.n_total})")
        if np.any(np.diff(omega) <= 0):
            raise ValueError("omega must be strictly increasing")
        if self.kind not in KINDS:
            raise ValueError(f"unknown pattern kind {self.kind!r}")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)

    def __eq__(self, other):
        if not isinstance(other, SamplingPattern):
            return NotImplemented
        return (
            self.n_total == other.n_total
            and self.seed == other.seed
            and self.kind == other.kind
            and np.array_equal(self.omega, other.omega)
        )

    @property
    def m(self) -> int:
        return int(self.omega.size)

    @property
    def rate(self) -> float:
        return self.m / self.n_total

    def mask(self) -> np.ndarray:
        out = np.zeros(self.n_total, dtype=bool)
        out[self.omega] = True
        return out


def full(n: int) -> SamplingPattern:
    return SamplingPattern(np.arange(n), n, 0, "full")


def poisson_gap(n: int, m: int, seed: int = 0, max_tries: int = 100_000) -> SamplingPattern:
    """Sinusoidally weighted Poisson-gap schedule (Hyberts & Wagner, 2010).

    Starting at index 0, each sampled point is followed by a gap drawn from a
    Poisson law with mean ``scale * sin(pi * t / (2 n))``, so gaps are short
    early and long late. ``scale`` starts at ``2 (n/m - 1)`` and is nudged by
    2% up or down until exactly ``m`` points fit.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if m == n:
        return SamplingPattern(np.arange(n), n, seed, "poisson_gap")
    rng = np.random.default_rng(seed)
    scale = 2.0 * (n / m - 1.0)
    for _ in range(max_tries):
        picked = []
        i = 0
        while i < n:
            picked.append(i)
            i += 1
            i += int(rng.poisson(scale * math.sin(math.pi * i / (2.0 * n))))
        if len(picked) == m:
            return SamplingPattern(np.array(picked), n, seed, "poisson_gap")
        scale = scale * 1.02 if len(picked) > m else scale / 1.02
    raise RuntimeError(f"Poisson-gap search did not hit m={m} of n={n} in {max_tries} tries")


def cartesian_1d(z: int, rate: float, center_fraction: float = 0.04, seed: int = 0) -> SamplingPattern:
    """Phase-encode line mask: a contiguous centre band plus random lines.

    The centre band holds ``ceil(center_fraction * z)`` lines; the rest of the
    ``floor(rate * z)`` lines are drawn uniformly without replacement.
    """
    if not 0 < rate <= 1:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    if not 0 <= center_fraction <= rate:
        raise ValueError(f"center_fraction must lie in [0, rate], got {center_fraction}")
    total = max(1, math.floor(rate * z + 1e-9))
    n_center = min(math.ceil(center_fraction * z - 1e-9), total)
    start = (z - n_center) // 2
    center = np.arange(start, start + n_center)
    rest = np.setdiff1d(np.arange(z), center)
    rng = np.random.default_rng(seed)
    extra = rng.choice(rest, size=total - n_center, replace=False) if total > n_center else np.array([], dtype=int)
    return SamplingPattern(np.sort(np.concatenate([center, extra])), z, seed, "cartesian_1d")


def uniform_random(n: int, m: int, seed: int = 0) -> SamplingPattern:
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    return SamplingPattern(np.sort(rng.choice(n, size=m, replace=False)), n, seed, "uniform_random")


def make_pattern(kind: str, n: int, rate: float, seed: int = 0, center_fraction: float = 0.04) -> SamplingPattern:
    """Build a pattern of ``kind`` keeping ``round(rate * n)`` samples."""
    m = max(1, min(n, int(round(rate * n))))
    if kind == "poisson_gap":
        return poisson_gap(n, m, seed)
    if kind == "uniform_random":
        return uniform_random(n, m, seed)
    if kind == "cartesian_1d":
        return cartesian_1d(n, rate, center_fraction, seed)
    if kind == "full":
        return full(n)
    raise ValueError(f"unknown pattern kind {kind!r}")


def apply_U(x, pattern: SamplingPattern) -> np.ndarray:
    """Keep the samples at ``pattern.omega`` (along the first axis)."""
    x = np.asarray(x)
    if x.shape[0] != pattern.n_total:
        raise ValueError(f"signal length {x.shape[0]} != pattern length {pattern.n_total}")
    return x[pattern.omega].copy()


def apply_U_star(y, pattern: SamplingPattern) -> np.ndarray:
    """Zero-fill ``y`` back to full length."""
    y = np.asarray(y)
    if y.shape[0] != pattern.m:
        raise ValueError(f"{y.shape[0]} samples given, pattern keeps {pattern.m}")
    out = np.zeros((pattern.n_total,) + y.shape[1:], dtype=np.result_type(y.dtype, complex))
    out[pattern.omega] = y
    return out
