"""Optimization solvers for low-rank Hankel reconstruction.

``penalty_solve`` is the penalty-method alternating minimization of

    1/2 (|P|_F^2 + |Q|_F^2) + lam/2 |y - U x|^2 + beta/2 |H x - P Q^H|_F^2

in which every sub-problem has a closed form. ``admm_lrhmf_solve`` adds a
Lagrange multiplier to the same splitting. ``svt_nuclear_solve`` minimizes
the convex nuclear-norm model with full SVDs and serves as a small-instance
reference; ``cs_solve`` is the l1/DFT compressed-sensing baseline.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from hankelrecon.hankel import HankelOperator, default_shape
from hankelrecon.sampling import SamplingPattern, apply_U, apply_U_star

log = logging.getLogger(__name__)


class SolverDivergence(RuntimeError):
    """Raised when an iterate becomes non-finite."""


@dataclass
class FactorPair:
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        if self.p.ndim != 2 or self.q.ndim != 2 or self.p.shape[1] != self.q.shape[1]:
            raise ValueError(f"factor shapes {self.p.shape} and {self.q.shape} do not share a rank")
        if self.p.shape[1] < 1:
            raise ValueError("factor rank must be >= 1")

    @property
    def rank(self) -> int:
        return self.p.shape[1]

    def product(self) -> np.ndarray:
        return self.p @ self.q.conj().T

    def nuclear_proxy(self) -> float:
        """``(|P|_F^2 + |Q|_F^2) / 2``, an upper bound on ``|P Q^H|_*``."""
        return 0.5 * (np.vdot(self.p, self.p).real + np.vdot(self.q, self.q).real)


# lambda/beta of the factorization solvers and lambda of the l1 baseline, by sampling rate
LAMBDA_OVER_BETA = {
    0.10: 10**6.0, 0.15: 10**3.0, 0.20: 10**2.5, 0.25: 10**2.5, 0.30: 10**2.5,
    0.35: 10**2.5, 0.40: 10**2.5, 0.45: 10**2.5, 0.50: 10**2.0,
}
CS_LAMBDA = {
    0.10: 0.17, 0.15: 0.10, 0.20: 0.08, 0.25: 0.05, 0.30: 0.05,
    0.35: 0.05, 0.40: 0.04, 0.45: 0.04, 0.50: 0.03,
}


def _nearest(table: dict, rate: float) -> float:
    keys = sorted(table)
    i = bisect_left(keys, rate)
    cands = keys[max(0, i - 1):i + 1]
    return table[min(cands, key=lambda k: (abs(k - rate), k))]


def default_lambda_ratio(rate: float) -> float:
    """Tabulated lambda/beta for the nearest sampling rate in 10%..50%."""
    return _nearest(LAMBDA_OVER_BETA, rate)


def default_cs_lambda(rate: float) -> float:
    return _nearest(CS_LAMBDA, rate)


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    beta: float = 20.0
    rank_cap: int = 20
    max_iters: int = 2000
    tol: float = 1e-6

    def __post_init__(self):
        if not self.lam > 0 or not self.beta > 0:
            raise ValueError("lam and beta must be positive")
        if self.rank_cap < 1 or self.max_iters < 1 or self.tol < 0:
            raise ValueError("invalid rank_cap, max_iters or tol")

    @classmethod
    def for_rate(cls, rate: float, beta: float = 20.0, **kw) -> "SolverConfig":
        return cls(lam=default_lambda_ratio(rate) * beta, beta=beta, **kw)

    def check(self, op: HankelOperator):
        if self.rank_cap > min(op.matrix_shape):
            raise ValueError(f"rank_cap {self.rank_cap} exceeds Hankel dims {op.matrix_shape}")


@dataclass
class ObjectiveTrace:
    """Per-iteration objective terms."""

    iters: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    fidelity: list = field(default_factory=list)
    penalty: list = field(default_factory=list)
    nucproxy: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    converged: bool = False
    n_iters: int = 0

    COLUMNS = ("iter", "objective", "fidelity", "penalty", "nucproxy", "seconds")

    def append(self, it, terms, seconds, residual=float("nan")):
        self.iters.append(it)
        self.objective.append(terms["objective"])
        self.fidelity.append(terms["fidelity"])
        self.penalty.append(terms["penalty"])
        self.nucproxy.append(terms["nucproxy"])
        self.seconds.append(seconds)
        self.residual.append(residual)

    def __len__(self):
        return len(self.iters)

    def rows(self):
        return zip(self.iters, self.objective, self.fidelity, self.penalty, self.nucproxy, self.seconds)

    def to_csv(self, path, include_time: bool = True):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for it, obj, fid, pen, nuc, sec in self.rows():
                w.writerow([it, repr(float(obj)), repr(float(fid)), repr(float(pen)), repr(float(nuc)), repr(float(sec)) if include_time else ""])


def _operator(op, n: int) -> HankelOperator:
    return op if op is not None else HankelOperator(default_shape(n))


def balanced_factors(X, rank: int | None = None) -> FactorPair:
    """Balanced truncated SVD factors of a matrix: ``P = U S^1/2``, ``Q = V S^1/2``.

    At full rank ``P Q^H = X`` and ``(|P|^2 + |Q|^2) / 2`` equals the nuclear norm.
    """
    X = np.asarray(X, dtype=complex)
    rank = min(X.shape) if rank is None else rank
    if not 1 <= rank <= min(X.shape):
        raise ValueError(f"rank {rank} outside [1, {min(X.shape)}]")
    _check_finite(X, where="matrix to factor")
    try:
        u, s, vh = linalg.svd(X, full_matrices=False, lapack_driver="gesdd")
    except linalg.LinAlgError:
        try:
            u, s, vh = linalg.svd(X, full_matrices=False, lapack_driver="gesvd")
        except linalg.LinAlgError as exc:
            raise SolverDivergence("SVD did not converge") from exc
    root = np.sqrt(s[:rank])
    return FactorPair(u[:, :rank] * root, vh[:rank].conj().T * root)


def init_factors(x, op: HankelOperator | int | None, rank: int) -> FactorPair:
    """Balanced truncated SVD factors of ``H(x)``."""
    x = np.asarray(x, dtype=complex)
    if not isinstance(op, HankelOperator):
        op = HankelOperator(op) if op is not None else HankelOperator(default_shape(x.shape[0]))
    if rank > min(op.matrix_shape):
        raise ValueError(f"rank {rank} exceeds Hankel dims {op.matrix_shape}")
    _check_finite(x, where="initial signal")
    return balanced_factors(op.forward(x), rank)


def _right_solve(b, f, beta):
    """``b @ inv(I + beta f^H f)`` via Cholesky; pseudo-inverse if that fails."""
    g = np.eye(f.shape[1]) + beta * (f.conj().T @ f)
    try:
        c = linalg.cho_factor(g)
        return linalg.cho_solve(c, b.conj().T).conj().T
    except linalg.LinAlgError:
        log.warning("Cholesky of I + beta F^H F failed; falling back to pseudo-inverse")
        return b @ linalg.pinv(g)


def update_P(x, q, beta: float, op: HankelOperator) -> np.ndarray:
    """Minimizer of ``|P|^2/2 + beta/2 |H x - P q^H|^2``: ``beta H(x) q (I + beta q^H q)^-1``."""
    return _right_solve(beta * op.times(x, q), q, beta)


def update_Q(x, p, beta: float, op: HankelOperator) -> np.ndarray:
    """Minimizer of ``|Q|^2/2 + beta/2 |H x - p Q^H|^2``."""
    return _right_solve(beta * op.h_times(x, p), p, beta)


def data_consistency(zero_filled, x_tilde, gamma: float, pattern: SamplingPattern) -> np.ndarray:
    """Blend ``x_tilde`` toward the measurements on the sampled positions.

    At sampled ``n`` the result is ``(gamma y_n + x_tilde_n) / (1 + gamma)``;
    elsewhere ``x_tilde`` is kept. ``gamma = inf`` replaces sampled values.
    """
    zero_filled = np.asarray(zero_filled)
    out = np.array(x_tilde, dtype=complex, copy=True)
    if out.shape != zero_filled.shape:
        raise ValueError(f"shape mismatch {out.shape} vs {zero_filled.shape}")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    om = pattern.omega
    if math.isinf(gamma):
        out[om] = zero_filled[om]
    else:
        out[om] = (gamma * zero_filled[om] + out[om]) / (1.0 + gamma)
    return out


def update_x(y, pattern: SamplingPattern, pair: FactorPair, lam: float, beta: float, op: HankelOperator) -> np.ndarray:
    """x-step; with ``H*H = I`` it is a data-consistency blend with ``gamma = lam / beta``."""
    return data_consistency(apply_U_star(y, pattern), op.lowrank_adjoint(pair.p, pair.q), lam / beta, pattern)


def objective_terms(x, y, pattern, pair: FactorPair, lam, beta, op: HankelOperator, multiplier=None) -> dict:
    resid = op.forward(x) - pair.product()
    fidelity = 0.5 * lam * float(np.vdot(y - apply_U(x, pattern), y - apply_U(x, pattern)).real)
    penalty = 0.5 * beta * float(np.vdot(resid, resid).real)
    nuc = pair.nuclear_proxy()
    obj = nuc + fidelity + penalty
    if multiplier is not None:
        obj += float(np.vdot(multiplier, resid).real)
    return {"objective": obj, "fidelity": fidelity, "penalty": penalty, "nucproxy": nuc, "residual": resid}


def _check_finite(*arrays, where="iterate"):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise SolverDivergence(f"non-finite values in {where}")


def _rel_change(new, old):
    denom = np.linalg.norm(old)
    return np.linalg.norm(new - old) / (denom if denom > 0 else 1.0)


def penalty_solve(y, pattern: SamplingPattern, config: SolverConfig, op: HankelOperator | None = None,
                  x0=None, record: bool = True):
    """Penalty-method Hankel factorization; returns ``(x, trace)``.

    Starts from ``x = U* y`` (or ``x0``) with balanced SVD factors, then
    repeats P-, Q- and x-updates until the relative change of ``x`` drops
    below ``config.tol`` or ``config.max_iters`` is reached.
    """
    y = np.asarray(y, dtype=complex)
    op = _operator(op, pattern.n_total)
    config.check(op)
    x = apply_U_star(y, pattern) if x0 is None else np.array(x0, dtype=complex)
    pair = init_factors(x, op, config.rank_cap)
    trace = ObjectiveTrace()
    t0 = time.perf_counter()
    for it in range(1, config.max_iters + 1):
        pair.p = update_P(x, pair.q, config.beta, op)
        pair.q = update_Q(x, pair.p, config.beta, op)
        x_new = update_x(y, pattern, pair, config.lam, config.beta, op)
        _check_finite(pair.p, pair.q, x_new, where=f"penalty_solve iteration {it}")
        change = _rel_change(x_new, x)
        x = x_new
        if record:
            terms = objective_terms(x, y, pattern, pair, config.lam, config.beta, op)
            res = np.linalg.norm(terms["residual"]) / max(np.linalg.norm(op.forward(x)), 1e-300)
            trace.append(it, terms, time.perf_counter() - t0, res)
        if change < config.tol:
            trace.converged = True
            break
    trace.factors = pair
    trace.n_iters = it
    return x, trace


def admm_lrhmf_solve(y, pattern: SamplingPattern, config: SolverConfig, op: HankelOperator | None = None,
                     update_multiplier: bool = True, record: bool = True):
    """Augmented-Lagrangian variant with multiplier ``D``; returns ``(x, trace)``.

    Updates, with ``G(F) = I + beta F^H F``::

        P = (beta H(x) + D) Q G(Q)^-1
        Q = (beta H(x) + D)^H P G(P)^-1
        x = blend(U* y, H*(P Q^H - D / beta), lam / beta)
        D = D + beta (H(x) - P Q^H)

    Stops once both the relative change of ``x`` and the relative primal
    residual ``|H x - P Q^H| / |H x|`` are below ``config.tol``. With
    ``update_multiplier=False`` ``D`` stays zero and the iteration is
    exactly :func:`penalty_solve`.
    """
    y = np.asarray(y, dtype=complex)
    op = _operator(op, pattern.n_total)
    config.check(op)
    beta = config.beta
    x = apply_U_star(y, pattern)
    zf = x.copy()
    pair = init_factors(x, op, config.rank_cap)
    d = np.zeros(op.matrix_shape, dtype=complex)
    trace = ObjectiveTrace()
    t0 = time.perf_counter()
    for it in range(1, config.max_iters + 1):
        pair.p = _right_solve(beta * op.times(x, pair.q) + d @ pair.q, pair.q, beta)
        pair.q = _right_solve(beta * op.h_times(x, pair.p) + d.conj().T @ pair.p, pair.p, beta)
        target = op.lowrank_adjoint(pair.p, pair.q)
        if update_multiplier:
            target = target - op.adjoint(d) / beta
        x_new = data_consistency(zf, target, config.lam / beta, pattern)
        resid = op.forward(x_new) - pair.product()
        if update_multiplier:
            d = d + beta * resid
        _check_finite(pair.p, pair.q, x_new, d, where=f"admm_lrhmf_solve iteration {it}")
        change = _rel_change(x_new, x)
        x = x_new
        rel_res = np.linalg.norm(resid) / max(np.linalg.norm(op.forward(x)), 1e-300)
        if record:
            terms = objective_terms(x, y, pattern, pair, config.lam, beta, op, multiplier=d if update_multiplier else None)
            trace.append(it, terms, time.perf_counter() - t0, rel_res)
        done = change < config.tol and (rel_res < config.tol or not update_multiplier)
        if done:
            trace.converged = True
            break
    trace.factors = pair
    trace.n_iters = it
    trace.multiplier = d
    return x, trace


def singular_value_threshold(X, tau: float) -> np.ndarray:
    """Soft-threshold the singular values of ``X`` by ``tau``."""
    u, s, vh = linalg.svd(X, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    return (u[:, keep] * s[keep]) @ vh[keep]


def svt_nuclear_solve(y, pattern: SamplingPattern, lam: float, iters: int = 500, op: HankelOperator | None = None,
                      mu: float | None = None, tau: float | None = None, tol: float = 0.0):
    """Nuclear-norm Hankel completion ``min |H x|_* + lam/2 |y - U x|^2`` by ADMM.

    Splits ``Z = H x``; the Z-step is a singular value threshold at ``tau``
    (default ``1 / mu``) and the x-step solves its normal equations exactly,
    using the true multiplicity of every sample in the Hankel matrix.
    ``lam = inf`` enforces ``U x = y``. Intended for small problems.
    """
    y = np.asarray(y, dtype=complex)
    op = _operator(op, pattern.n_total)
    zf = apply_U_star(y, pattern)
    mask = np.zeros(zf.shape, dtype=bool)
    mask[pattern.omega] = True
    w = op.multiplicity()
    if mu is None:
        smax = linalg.norm(op.forward(zf), 2)
        mu = 1.0 / (0.05 * smax) if smax > 0 else 1.0
    tau = 1.0 / mu if tau is None else tau
    x = zf.copy()
    d = np.zeros(op.matrix_shape, dtype=complex)
    for _ in range(iters):
        hx = op.forward(x)
        z = singular_value_threshold(hx + d / mu, tau) if tau > 0 else hx + d / mu
        a = op.adjoint(z - d / mu)
        if math.isinf(lam):
            x_new = np.where(mask, zf, a)
        else:
            x_new = (lam * mask * zf + mu * w * a) / (lam * mask + mu * w)
        d = d + mu * (op.forward(x_new) - z)
        change = _rel_change(x_new, x)
        x = x_new
        if tol and change < tol:
            break
    return x


def _soft(s, t):
    mag = np.abs(s)
    return np.where(mag > t, (1.0 - t / np.maximum(mag, 1e-300)) * s, 0.0)


def cs_solve(y, pattern: SamplingPattern, lam: float, iters: int = 500, tol: float = 0.0):
    """l1 compressed sensing in the unitary DFT basis by monotone FISTA.

    Solves ``min_x 1/2 |y - U x|^2 + lam |F x|_1`` through its synthesis
    form over the spectrum ``s = F x`` (step 1, the Lipschitz constant).
    Returns ``x`` and the objective history.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    y = np.asarray(y, dtype=complex)
    zf = apply_U_star(y, pattern)
    mask = pattern.mask()

    def objective(s):
        x = np.fft.ifft(s, norm="ortho")
        r = mask * x - zf
        return 0.5 * float(np.vdot(r, r).real) + lam * float(np.abs(s).sum())

    s = np.fft.fft(zf, norm="ortho")
    f_s = objective(s)
    v = s.copy()
    t = 1.0
    history = [f_s]
    for _ in range(iters):
        grad = np.fft.fft(mask * np.fft.ifft(v, norm="ortho") - zf, norm="ortho")
        z = _soft(v - grad, lam)
        f_z = objective(z)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        s_prev = s
        if f_z <= f_s:
            s, f_s = z, f_z
        v = s + (t / t_next) * (z - s) + ((t - 1.0) / t_next) * (s - s_prev)
        t = t_next
        history.append(f_s)
        if tol and _rel_change(s, s_prev) < tol and s is z:
            break
    return np.fft.ifft(s, norm="ortho"), history
