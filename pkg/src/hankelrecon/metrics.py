"""Reconstruction quality measures and the histogram mismatch distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from hankelrecon.hankel import HankelShape, default_shape, hankel

N_BINS = 101


def rlne(truth, estimate) -> float:
    """Relative l2 norm error ``|truth - estimate| / |truth|``."""
    truth = np.asarray(truth)
    estimate = np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise ValueError(f"shape mismatch {truth.shape} vs {estimate.shape}")
    denom = np.linalg.norm(truth)
    if denom == 0:
        raise ValueError("RLNE undefined for an all-zero reference")
    return float(np.linalg.norm(truth - estimate) / denom)


def pearson_r2(c, d) -> float:
    """Squared Pearson correlation of two real sequences."""
    c = np.asarray(c, dtype=float).ravel()
    d = np.asarray(d, dtype=float).ravel()
    if c.shape != d.shape or c.size < 2:
        raise ValueError("need two sequences of equal length >= 2")
    dc = c - c.mean()
    dd = d - d.mean()
    sc = np.sqrt(np.dot(dc, dc))
    sd = np.sqrt(np.dot(dd, dd))
    if sc == 0 or sd == 0:
        raise ValueError("correlation undefined for a constant sequence")
    return float((np.dot(dc, dd) / (sc * sd)) ** 2)


def hankel_singular_values(x, shape: HankelShape | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return np.linalg.svd(hankel(x, shape or default_shape(x.shape[0])), compute_uv=False)


def effective_rank(x, shape: HankelShape | None = None, threshold: float = 1e-3) -> int:
    """Number of Hankel singular values above ``threshold`` times their sum."""
    s = hankel_singular_values(x, shape)
    total = s.sum()
    if total == 0:
        raise ValueError("effective rank undefined for a zero signal")
    return int(np.count_nonzero(s / total > threshold))


def effective_rank_of_matrix(X, threshold: float = 1e-3) -> int:
    s = np.linalg.svd(X, compute_uv=False)
    total = s.sum()
    if total == 0:
        raise ValueError("effective rank undefined for a zero matrix")
    return int(np.count_nonzero(s / total > threshold))


def nuclear_norm(x, shape: HankelShape | None = None) -> float:
    """Sum of the singular values of ``H(x)``."""
    return float(hankel_singular_values(x, shape).sum())


@dataclass(frozen=True, eq=False)
class Histogram101:
    """Probability mass over 101 bins.

    Bin 0 holds exact zeros (unsampled positions); bins 1..100 split the
    shared magnitude range ``(lo, hi)`` uniformly.
    """

    mass: np.ndarray
    lo: float
    hi: float
    log_scaled: bool = False

    def __post_init__(self):
        if self.mass.shape != (N_BINS,):
            raise ValueError(f"need {N_BINS} bins, got {self.mass.shape}")
        if not self.hi > self.lo:
            raise ValueError("degenerate histogram range")
        if abs(self.mass.sum() - 1.0) > 1e-12 or np.any(self.mass < 0):
            raise ValueError("mass must be non-negative and sum to 1")


def _magnitudes(signals, log_scaled):
    flat = np.concatenate([np.abs(np.asarray(s)).ravel() for s in signals])
    nonzero = flat[flat != 0]
    if log_scaled:
        nonzero = np.log(nonzero)
    return flat.size, flat.size - nonzero.size, nonzero


def shared_range(*signal_sets, log_scaled: bool = False) -> tuple[float, float]:
    """Min and max of the non-zero (log) magnitudes pooled over all sets."""
    pooled = [_magnitudes(s, log_scaled)[2] for s in signal_sets]
    pooled = np.concatenate(pooled)
    if pooled.size == 0:
        return 0.0, 1.0
    lo, hi = float(pooled.min()), float(pooled.max())
    if hi == lo:
        hi = lo + 1.0
    return lo, hi


def build_histogram(signals, log_scaled: bool = False, value_range: tuple[float, float] | None = None) -> Histogram101:
    """Pool zero-filled signals into a 101-bin mass function."""
    signals = list(signals)
    if not signals:
        raise ValueError("need at least one signal")
    lo, hi = value_range if value_range is not None else shared_range(signals, log_scaled=log_scaled)
    if not hi > lo:
        raise ValueError("degenerate histogram range")
    total, zeros, mags = _magnitudes(signals, log_scaled)
    counts = np.zeros(N_BINS)
    counts[0] = zeros
    if mags.size:
        idx = np.floor((mags - lo) / (hi - lo) * (N_BINS - 1)).astype(np.int64)
        idx = np.clip(idx, 0, N_BINS - 2) + 1
        counts[1:] = np.bincount(idx - 1, minlength=N_BINS - 1)
    mass = counts / total
    return Histogram101(mass, lo, hi, log_scaled)


def wasserstein_01(p: Histogram101, q: Histogram101) -> float:
    """Optimal transport cost under the 0/1 ground cost, i.e. total variation."""
    if (p.lo, p.hi, p.log_scaled) != (q.lo, q.hi, q.log_scaled):
        raise ValueError("histograms are on different ranges")
    return 0.5 * float(np.abs(p.mass - q.mass).sum())


def find_peaks(magnitude, rel_height: float = 2.0, min_separation: int = 2) -> np.ndarray:
    """Indices of local maxima above ``rel_height`` times the median.

    Among maxima closer than ``min_separation`` bins only the tallest is kept.
    """
    mag = np.asarray(magnitude, dtype=float)
    if mag.ndim == 1:
        left = np.r_[-np.inf, mag[:-1]]
        right = np.r_[mag[1:], -np.inf]
        cand = np.flatnonzero((mag > left) & (mag >= right) & (mag > rel_height * np.median(mag)))
        kept: list[int] = []
        for i in sorted(cand, key=lambda k: -mag[k]):
            if all(abs(i - j) >= min_separation for j in kept):
                kept.append(int(i))
        return np.array(sorted(kept), dtype=np.int64)
    size = 2 * min_separation - 1
    local = mag == ndimage.maximum_filter(mag, size=size, mode="nearest")
    return np.argwhere(local & (mag > rel_height * np.median(mag)))


def peak_segments(truth_magnitude, **peak_kw) -> list[slice]:
    """Split the axis at the minima between adjacent peaks of the reference."""
    mag = np.asarray(truth_magnitude, dtype=float)
    peaks = find_peaks(mag, **peak_kw)
    if peaks.size == 0:
        raise ValueError("no peaks detected in the reference spectrum")
    cuts = [0]
    for a, b in zip(peaks[:-1], peaks[1:]):
        cuts.append(int(a + np.argmin(mag[a:b + 1])))
    cuts.append(mag.size)
    return [slice(lo, hi) for lo, hi in zip(cuts[:-1], cuts[1:])]


def peak_rlne(truth_spectrum, estimate_spectrum, **peak_kw) -> np.ndarray:
    """RLNE restricted to each peak's segment of the (complex) spectrum."""
    truth_spectrum = np.asarray(truth_spectrum)
    estimate_spectrum = np.asarray(estimate_spectrum)
    segs = peak_segments(np.abs(truth_spectrum), **peak_kw)
    return np.array([rlne(truth_spectrum[s], estimate_spectrum[s]) for s in segs])


def spectrum(x, axis: int = -1) -> np.ndarray:
    """Unitary DFT of a time signal."""
    return np.fft.fft(x, axis=axis, norm="ortho")
