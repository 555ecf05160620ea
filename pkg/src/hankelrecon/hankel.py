"""Forward and averaging-adjoint Hankel transforms.

Index conventions are 0-based: ``H(x)[i, j] = x[i + j]``. The adjoint used
throughout the package is the *averaging* adjoint, which divides each
anti-diagonal sum by the number of entries on it so that ``H*(H x) = x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hankelrecon import _kernels


@dataclass(frozen=True)
class HankelShape:
    """Row and column counts of a Hankel matrix built from a vector of length
    ``n1 + n2 - 1``."""

    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError(f"Hankel dimensions must be positive, got {self.n1}x{self.n2}")

    @property
    def length(self) -> int:
        return self.n1 + self.n2 - 1


def default_shape(length: int) -> HankelShape:
    """Square or near-square shape for a vector of ``length`` samples."""
    if length < 1:
        raise ValueError("length must be >= 1")
    n1 = -(-(length + 1) // 2)
    return HankelShape(n1, length + 1 - n1)


def _check_length(x, shape: HankelShape):
    if x.shape[0] != shape.length:
        raise ValueError(
            f"vector of length {x.shape[0]} does not fit Hankel shape "
            f"{shape.n1}x{shape.n2} (needs {shape.length})"
        )


def antidiag_counts(shape: HankelShape) -> np.ndarray:
    """Number of entries on each anti-diagonal of an ``n1 x n2`` matrix."""
    k = np.arange(shape.length)
    return np.minimum.reduce([k + 1, np.full_like(k, shape.n1), np.full_like(k, shape.n2), shape.length - k]).astype(float)


def hankel(x, shape: HankelShape | None = None) -> np.ndarray:
    """Build the ``n1 x n2`` Hankel matrix of ``x``."""
    x = np.asarray(x, dtype=complex)
    shape = shape or default_shape(x.shape[0])
    _check_length(x, shape)
    return _kernels.hankel_matrix(x, shape.n1)


def hankel_adjoint_avg(X, shape: HankelShape | None = None) -> np.ndarray:
    """Collapse a matrix to a vector by averaging each anti-diagonal."""
    X = np.asarray(X, dtype=complex)
    if shape is not None and X.shape != (shape.n1, shape.n2):
        raise ValueError(f"matrix shape {X.shape} does not match {shape}")
    return _kernels.antidiag_mean(X)


def hankel_adjoint_sum(X) -> np.ndarray:
    """Unweighted anti-diagonal sums; the true Euclidean adjoint of ``hankel``."""
    X = np.asarray(X, dtype=complex)
    shape = HankelShape(*X.shape)
    return _kernels.antidiag_mean(X) * antidiag_counts(shape)


def flip_conj(x) -> np.ndarray:
    """Reverse ``x`` about its centre and conjugate it."""
    return np.conj(np.asarray(x)[::-1])


@dataclass(frozen=True)
class CoilBlock:
    """Multi-coil data: one column per coil, ``n1 + n2 - 1`` rows."""

    data: np.ndarray
    shape: HankelShape

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[0] != self.shape.length:
            raise ValueError(
                f"coil block of shape {self.data.shape} needs {self.shape.length} rows"
            )

    @property
    def n_coils(self) -> int:
        return self.data.shape[1]


def hankel_vc(block: CoilBlock) -> np.ndarray:
    """Hankel matrix with virtual coils.

    Concatenates the Hankel matrix of every coil, then of every coil's
    flipped conjugate, giving ``n1 x 2*n2*n_coils``.
    """
    cols = [hankel(block.data[:, j], block.shape) for j in range(block.n_coils)]
    cols += [hankel(flip_conj(block.data[:, j]), block.shape) for j in range(block.n_coils)]
    return np.hstack(cols)


def hankel_vc_adjoint(Y, shape: HankelShape, n_coils: int) -> CoilBlock:
    """Inverse of :func:`hankel_vc`.

    Coil ``j`` is the mean of the averaged adjoint of sub-block ``j`` and the
    flipped conjugate of the averaged adjoint of sub-block ``n_coils + j``.
    """
    Y = np.asarray(Y, dtype=complex)
    if Y.shape[0] != shape.n1 or Y.shape[1] != 2 * shape.n2 * n_coils:
        raise ValueError(
            f"matrix of shape {Y.shape} is not {shape.n1}x{2 * shape.n2 * n_coils} "
            f"(2 * n2 * n_coils columns)"
        )
    n2 = shape.n2
    out = np.empty((shape.length, n_coils), dtype=complex)
    for j in range(n_coils):
        real = _kernels.antidiag_mean(Y[:, j * n2:(j + 1) * n2])
        virtual = _kernels.antidiag_mean(Y[:, (n_coils + j) * n2:(n_coils + j + 1) * n2])
        out[:, j] = 0.5 * (real + flip_conj(virtual))
    return CoilBlock(out, shape)


class HankelOperator:
    """Lifting of a 1D signal to its Hankel matrix.

    The solvers only talk to this interface, which lets the same iteration
    run on plain vectors and on multi-coil blocks (:class:`VirtualCoilOperator`).
    """

    def __init__(self, shape: HankelShape):
        self.shape = shape

    @property
    def matrix_shape(self) -> tuple[int, int]:
        return self.shape.n1, self.shape.n2

    @property
    def signal_shape(self) -> tuple[int, ...]:
        return (self.shape.length,)

    def forward(self, x):
        return hankel(x, self.shape)

    def adjoint(self, X):
        return hankel_adjoint_avg(X, self.shape)

    def times(self, x, q):
        """``H(x) @ q``"""
        return _kernels.hankel_times(x, q, self.shape.n1)

    def h_times(self, x, p):
        """``H(x)^H @ p``"""
        return _kernels.hankel_h_times(x, p, self.shape.n2)

    def lowrank_adjoint(self, p, q):
        """``H*(p @ q^H)``"""
        return _kernels.lowrank_antidiag_mean(p, q)

    def multiplicity(self) -> np.ndarray:
        """How many matrix entries each signal sample occupies."""
        return antidiag_counts(self.shape)


class VirtualCoilOperator(HankelOperator):
    """Virtual-coil Hankel lifting of a ``length x n_coils`` block."""

    def __init__(self, shape: HankelShape, n_coils: int):
        super().__init__(shape)
        if n_coils < 1:
            raise ValueError("n_coils must be >= 1")
        self.n_coils = n_coils

    @property
    def matrix_shape(self) -> tuple[int, int]:
        return self.shape.n1, 2 * self.shape.n2 * self.n_coils

    @property
    def signal_shape(self) -> tuple[int, ...]:
        return (self.shape.length, self.n_coils)

    def _columns(self, x):
        x = np.asarray(x, dtype=complex)
        return [x[:, j] for j in range(self.n_coils)] + [flip_conj(x[:, j]) for j in range(self.n_coils)]

    def forward(self, x):
        return hankel_vc(CoilBlock(np.asarray(x, dtype=complex), self.shape))

    def adjoint(self, X):
        return hankel_vc_adjoint(X, self.shape, self.n_coils).data

    def times(self, x, q):
        n2 = self.shape.n2
        out = 0
        for b, col in enumerate(self._columns(x)):
            out = out + _kernels.hankel_times(col, q[b * n2:(b + 1) * n2], self.shape.n1)
        return out

    def h_times(self, x, p):
        return np.vstack([_kernels.hankel_h_times(col, p, self.shape.n2) for col in self._columns(x)])

    def lowrank_adjoint(self, p, q):
        n2, c = self.shape.n2, self.n_coils
        out = np.empty(self.signal_shape, dtype=complex)
        for j in range(c):
            real = _kernels.lowrank_antidiag_mean(p, q[j * n2:(j + 1) * n2])
            virtual = _kernels.lowrank_antidiag_mean(p, q[(c + j) * n2:(c + j + 1) * n2])
            out[:, j] = 0.5 * (real + flip_conj(virtual))
        return out

    def multiplicity(self) -> np.ndarray:
        w = antidiag_counts(self.shape)
        return np.repeat((w + w[::-1])[:, None], self.n_coils, axis=1)
