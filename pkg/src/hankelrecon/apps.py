"""End-to-end drivers: 2D NMR spectra row by row and multi-coil MRI k-space."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np

from hankelrecon.hankel import HankelOperator, VirtualCoilOperator, default_shape
from hankelrecon.parallel import ordered_map
from hankelrecon.pipeline import EXPONENTIAL_BLOCKS, MRI_BLOCKS, PipelineConfig, run_pipeline
from hankelrecon.sampling import SamplingPattern, apply_U
from hankelrecon.solvers import (
    SolverConfig,
    admm_lrhmf_solve,
    cs_solve,
    default_cs_lambda,
    default_lambda_ratio,
    penalty_solve,
    svt_nuclear_solve,
)

SOLVERS = ("penalty", "admm", "cs", "adlr", "svt")


@dataclass(frozen=True)
class Spectrum2D:
    """Time-domain 2D data, ``direct x indirect``."""

    data: np.ndarray
    labels: tuple[str, str] = ("direct", "indirect")
    units: dict = field(default_factory=dict)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or min(data.shape) < 1:
            raise ValueError(f"need a non-empty 2D array, got shape {data.shape}")
        object.__setattr__(self, "data", data)

    @property
    def direct_dim(self) -> int:
        return self.data.shape[0]

    @property
    def indirect_dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class KSpaceVolume:
    """Multi-coil k-space, ``frequency-encode x phase-encode x coils``."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 3:
            raise ValueError(f"need an A x Z x C array, got shape {data.shape}")
        if data.shape[2] < 1:
            raise ValueError("need at least one coil")
        if min(data.shape[:2]) < 1:
            raise ValueError("empty k-space")
        object.__setattr__(self, "data", data)

    @property
    def n_coils(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class RowSolver:
    """Solver choice for independent 1D row problems.

    ``params`` overrides the solver's keyword arguments; rate-dependent
    defaults (regularization weights) come from the pattern's rate.
    """

    name: str = "penalty"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in SOLVERS:
            raise ValueError(f"unknown solver {self.name!r}; expected one of {SOLVERS}")


def solve_row(y, pattern: SamplingPattern, solver: RowSolver, op=None):
    """Reconstruct one row from its samples; returns ``(x, iterations)``.

    A pattern that keeps every sample leaves nothing to complete and the
    samples are returned unchanged.
    """
    if pattern.m == pattern.n_total:
        return np.array(y, dtype=complex, copy=True), 0
    kw = dict(solver.params)
    rate = pattern.rate
    op = op or HankelOperator(default_shape(pattern.n_total))
    if solver.name in ("penalty", "admm"):
        beta = kw.pop("beta", 20.0)
        lam = kw.pop("lam", default_lambda_ratio(rate) * beta)
        rank_cap = min(kw.pop("rank_cap", SolverConfig.rank_cap), *op.matrix_shape)
        cfg = SolverConfig(lam=lam, beta=beta, rank_cap=rank_cap, **kw)
        fn = penalty_solve if solver.name == "penalty" else admm_lrhmf_solve
        x, trace = fn(y, pattern, cfg, op=op, record=False)
        return x, trace.n_iters
    if solver.name == "cs":
        lam = kw.pop("lam", default_cs_lambda(rate))
        x, hist = cs_solve(y, pattern, lam, **kw)
        return x, len(hist)
    if solver.name == "svt":
        lam = kw.pop("lam", default_lambda_ratio(rate))
        iters = kw.pop("iters", 500)
        return svt_nuclear_solve(y, pattern, lam, iters=iters, op=op, **kw), iters
    cfg = kw.pop("config", None) or PipelineConfig(**kw)
    res = run_pipeline(y, pattern, cfg, op=op)
    return res.x, len(res.records)


class RowFailure(RuntimeError):
    """A single row problem failed; carries the row index."""

    def __init__(self, row: int, cause: BaseException):
        super().__init__(f"row {row} failed: {cause}")
        self.row = row
        self.cause = cause


def _nmr_row(item, pattern, solver):
    i, y = item
    try:
        return solve_row(y, pattern, solver)[0]
    except Exception as exc:  # re-raised with the row index
        raise RowFailure(i, exc) from exc


def reconstruct_nmr(spec: Spectrum2D, pattern: SamplingPattern, solver: RowSolver | None = None,
                    workers: int = 1) -> Spectrum2D:
    """Reconstruct every direct-dimension row along the indirect dimension.

    The same sampling pattern applies to every row. Rows are independent
    and are assembled in index order whatever ``workers`` is.
    """
    solver = solver or RowSolver()
    if pattern.n_total != spec.indirect_dim:
        raise ValueError(f"pattern length {pattern.n_total} != indirect dimension {spec.indirect_dim}")
    rows = [(i, apply_U(spec.data[i], pattern)) for i in range(spec.direct_dim)]
    out = ordered_map(partial(_nmr_row, pattern=pattern, solver=solver), rows, workers)
    return replace(spec, data=np.vstack(out))


def fft_c(a, axis):
    """Unitary DFT with the zero frequency at the array centre."""
    return np.fft.fftshift(np.fft.fft(np.fft.ifftshift(a, axes=axis), axis=axis, norm="ortho"), axes=axis)


def ifft_c(a, axis):
    return np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(a, axes=axis), axis=axis, norm="ortho"), axes=axis)


def kspace_to_image(kspace) -> np.ndarray:
    """Per-coil images from ``A x Z x C`` k-space."""
    return ifft_c(ifft_c(np.asarray(kspace), 0), 1)


def image_to_kspace(images) -> np.ndarray:
    return fft_c(fft_c(np.asarray(images), 0), 1)


def rsos(images, coil_axis: int = -1) -> np.ndarray:
    """Root sum of squares over coils."""
    images = np.asarray(images)
    if images.shape[coil_axis] < 1:
        raise ValueError("need at least one coil")
    return np.sqrt(np.sum(np.abs(images) ** 2, axis=coil_axis))


@dataclass(frozen=True)
class MRIConfig:
    blocks: tuple = MRI_BLOCKS
    rank_cap: int = 40
    plugin: str = "zero"
    solver: str = "adlr"
    svt_iters: int = 300


def _mri_row(item, pattern, config: MRIConfig, op):
    i, y = item
    if pattern.m == pattern.n_total:
        return np.array(y, dtype=complex, copy=True)
    try:
        if config.solver == "svt":
            return svt_nuclear_solve(y, pattern, math.inf, iters=config.svt_iters, op=op)
        cfg = PipelineConfig(blocks=config.blocks, rank_cap=config.rank_cap, plugin=config.plugin)
        return run_pipeline(y, pattern, cfg, op=op).x
    except Exception as exc:  # re-raised with the row index
        raise RowFailure(i, exc) from exc


def reconstruct_mri(vol: KSpaceVolume, pattern: SamplingPattern, config: MRIConfig | None = None,
                    workers: int = 1) -> tuple[KSpaceVolume, np.ndarray]:
    """Reconstruct undersampled multi-coil k-space.

    An inverse DFT along frequency encoding splits the data into independent
    rows, each a ``Z x C`` block undersampled along phase encoding. Every row
    goes through the block pipeline on the virtual-coil Hankel operator. The
    rank cap is clipped to the Hankel dimensions. Fully sampled rows are
    returned unchanged. Returns the k-space and the root-sum-of-squares
    magnitude image.
    """
    config = config or MRIConfig()
    a, z, c = vol.data.shape
    if pattern.n_total != z:
        raise ValueError(f"pattern length {pattern.n_total} != phase-encode dimension {z}")
    hybrid = ifft_c(vol.data, 0)
    op = VirtualCoilOperator(default_shape(z), c)
    rows = [(i, hybrid[i][pattern.omega]) for i in range(a)]
    out = ordered_map(partial(_mri_row, pattern=pattern, config=config, op=op), rows, workers)
    kspace = fft_c(np.stack(out), 0)
    return KSpaceVolume(kspace), rsos(kspace_to_image(kspace))


def gaussian_phantom(size: int = 64, n_coils: int = 2, seed: int = 0) -> np.ndarray:
    """Coil images of a sum of 2D Gaussians weighted by smooth complex coil maps.

    Returns a ``size x size x n_coils`` complex array.
    """
    rng = np.random.default_rng(seed)
    r, cc = np.mgrid[0:size, 0:size] / size - 0.5
    obj = np.zeros((size, size))
    for _ in range(6):
        r0, c0 = rng.uniform(-0.2, 0.2, 2)
        w = rng.uniform(0.04, 0.12)
        obj += rng.uniform(0.4, 1.0) * np.exp(-((r - r0) ** 2 + (cc - c0) ** 2) / (2 * w * w))
    coils = np.empty((size, size, n_coils), dtype=complex)
    for k in range(n_coils):
        ang = 2 * math.pi * k / n_coils
        cr, ccen = 0.5 * math.cos(ang), 0.5 * math.sin(ang)
        mag = np.exp(-((r - cr) ** 2 + (cc - ccen) ** 2) / (2 * 0.6 ** 2))
        phase = np.exp(1j * (0.8 * r * math.cos(ang) + 0.8 * cc * math.sin(ang)))
        coils[..., k] = obj * mag * phase
    return coils


def write_pgm(path, image):
    """16-bit binary PGM, max-normalized."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError("PGM export needs a 2D image")
    peak = image.max()
    scaled = np.zeros(image.shape) if peak <= 0 else np.clip(image / peak, 0, 1)
    data = np.round(scaled * 65535).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{image.shape[1]} {image.shape[0]}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if m is None:
        raise ValueError("not a binary PGM")
    w, h, maxval = (int(g) for g in m.groups())
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(raw[m.end():], dtype=dtype).reshape(h, w).astype(float)
