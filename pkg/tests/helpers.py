"""Shared test helpers and independent dense oracles."""

import numpy as np

try:
    from hankelrecon import _core
except ImportError:
    _core = None


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def dense_hankel(x, n1):
    """Hankel matrix built entry by entry."""
    n2 = len(x) - n1 + 1
    out = np.empty((n1, n2), dtype=complex)
    for i in range(n1):
        for j in range(n2):
            out[i, j] = x[i + j]
    return out


def loop_antidiag_mean(z):
    n1, n2 = z.shape
    acc = np.zeros(n1 + n2 - 1, dtype=complex)
    cnt = np.zeros(n1 + n2 - 1)
    for i in range(n1):
        for j in range(n2):
            acc[i + j] += z[i, j]
            cnt[i + j] += 1
    return acc / cnt


def lifting_matrix(n1, n2):
    """Dense 0/1 matrix mapping x to vec(H(x)) (row-major vec)."""
    length = n1 + n2 - 1
    m = np.zeros((n1 * n2, length))
    for i in range(n1):
        for j in range(n2):
            m[i * n2 + j, i + j] = 1.0
    return m


def normal_equation_x(y, pattern, p, q, lam, beta, shape):
    """Dense solve of (lam U*U + beta H*H) x = lam U*y + beta H*(P Q^H)."""
    n = shape.length
    lift = lifting_matrix(shape.n1, shape.n2)
    avg = np.linalg.pinv(lift)  # averaging adjoint as a matrix
    u = np.eye(n)[pattern.omega]
    a = lam * u.T @ u + beta * avg @ lift
    b = lam * u.T @ y + beta * avg @ (p @ q.conj().T).ravel()
    return np.linalg.solve(a, b)
