"""Alternating block pipeline: a plug-in factor stage followed by an exact
optimization stage in every block.

A block ``k`` runs

    P_dl = P_k + plugin_p(H(x_k) Q_k, Q_k, history_P)
    Q_dl = Q_k + plugin_q(H(x_k)^H P_dl, P_dl, history_Q)
    x_dl = blend(U* y, H*(P_dl Q_dl^H), gamma_dl)
    P_k+1 = beta_p H(x_dl) Q_dl (I + beta_p Q_dl^H Q_dl)^-1
    Q_k+1 = beta_q H(x_dl)^H P_k+1 (I + beta_q P_k+1^H P_k+1)^-1
    x_k+1 = blend(U* y, H*(P_k+1 Q_k+1^H), gamma)

The plug-in stage stands where a learned network would sit. Two plug-ins
ship with the package: ``zero`` (no correction) and ``svt_shrink``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy import linalg

from hankelrecon.hankel import HankelOperator, default_shape
from hankelrecon.io import write_csv
from hankelrecon.metrics import effective_rank_of_matrix, rlne
from hankelrecon.sampling import SamplingPattern, apply_U_star
from hankelrecon.solvers import SolverDivergence, data_consistency, init_factors, update_P, update_Q


@dataclass(frozen=True)
class BlockParams:
    gamma_dl: float
    gamma: float
    beta_p: float
    beta_q: float

    def __post_init__(self):
        for name in ("gamma_dl", "gamma", "beta_p", "beta_q"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


# learned per-block values for exponentials / NMR (10 blocks)
EXPONENTIAL_BLOCKS = (
    BlockParams(5.2e5, 1.9e5, 96.0, 87.6),
    BlockParams(6.7e4, 1.3e5, 98.4, 97.0),
    BlockParams(6.7e4, 1.6e0, 98.5, 98.9),
    BlockParams(3.7e1, 5.4e-1, 99.5, 95.7),
    BlockParams(4.4e0, 2.6e-1, 99.0, 102.1),
    BlockParams(4.0e0, 1.4e-1, 99.2, 102.7),
    BlockParams(2.3e0, 1.1e-1, 98.5, 105.7),
    BlockParams(2.0e0, 9.2e-2, 99.4, 105.0),
    BlockParams(1.2e0, 8.9e-2, 100.0, 107.6),
    BlockParams(4.6e-1, 9.5e-2, 98.4, 109.3),
)

# learned per-block values for multi-coil MRI (5 blocks)
MRI_BLOCKS = (
    BlockParams(1.4e5, 2.1e5, 92.3, 75.7),
    BlockParams(4.1e5, 1.1e5, 100.5, 75.4),
    BlockParams(3.2e5, 2.4e5, 101.9, 77.7),
    BlockParams(7.7e3, 2.0e5, 103.0, 79.2),
    BlockParams(6.4e4, 3.4e5, 98.1, 86.0),
)

MODES = ("ADLR", "ADLR_D", "ADLR_OD", "ADLR_DO")


@dataclass(frozen=True)
class PipelineConfig:
    blocks: tuple[BlockParams, ...] = EXPONENTIAL_BLOCKS
    rank_cap: int = 20
    mode: str = "ADLR"
    plugin: str = "zero"
    plugin_theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise ValueError("need at least one block")
        if self.rank_cap < 1:
            raise ValueError("rank_cap must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")


@dataclass(frozen=True)
class StageContext:
    """Read-only view of the pipeline state handed to plug-ins."""

    x: np.ndarray
    p: np.ndarray
    q: np.ndarray
    op: HankelOperator
    block: int


class PluginSolver(Protocol):
    """Additive correction maps for the two factors.

    Implementations must be pure: same inputs, same outputs, no mutation of
    the arrays they receive.
    """

    def plugin_p(self, hxq: np.ndarray, q: np.ndarray, history: tuple, ctx: StageContext) -> np.ndarray: ...

    def plugin_q(self, hxhp: np.ndarray, p: np.ndarray, history: tuple, ctx: StageContext) -> np.ndarray: ...


class ZeroPlugin:
    """No correction; the plug-in stage reduces to a data-consistency step."""

    def plugin_p(self, hxq, q, history, ctx):
        return np.zeros_like(ctx.p)

    def plugin_q(self, hxhp, p, history, ctx):
        return np.zeros_like(ctx.q)


class SVTShrinkPlugin:
    """Move the factors to the balanced, soft-thresholded rank-R SVD of ``H(x)``."""

    def __init__(self, theta: float = 0.0):
        if theta < 0:
            raise ValueError("theta must be >= 0")
        self.theta = theta

    def _targets(self, ctx: StageContext):
        rank = ctx.p.shape[1]
        u, s, vh = linalg.svd(ctx.op.forward(ctx.x), full_matrices=False)
        root = np.sqrt(np.maximum(s[:rank] - self.theta, 0.0))
        return u[:, :rank] * root, vh[:rank].conj().T * root

    def plugin_p(self, hxq, q, history, ctx):
        return self._targets(ctx)[0] - ctx.p

    def plugin_q(self, hxhp, p, history, ctx):
        return self._targets(ctx)[1] - ctx.q


def builtin_plugins() -> dict:
    """Factories of the shipped plug-ins, keyed by name."""
    return {"zero": lambda theta=0.0: ZeroPlugin(), "svt_shrink": SVTShrinkPlugin}


def make_plugin(name: str, theta: float = 0.0) -> PluginSolver:
    try:
        return builtin_plugins()[name](theta)
    except KeyError:
        raise ValueError(f"unknown plugin {name!r}") from None


@dataclass
class History:
    h_p: list = field(default_factory=list)
    h_q: list = field(default_factory=list)


@dataclass
class PipelineState:
    x: np.ndarray
    p: np.ndarray
    q: np.ndarray
    history: History


@dataclass
class StageRecord:
    """Output of one plug-in (``"dl"``) or optimizer (``"opt"``) stage."""

    block: int
    stage: str
    x: np.ndarray
    x_tilde: np.ndarray
    p: np.ndarray
    q: np.ndarray


def plugin_stage(state: PipelineState, params: BlockParams, plugin: PluginSolver, zero_filled,
                 pattern: SamplingPattern, op: HankelOperator, block: int = 0) -> tuple[PipelineState, StageRecord]:
    x, p, q = state.x, state.p, state.q
    ctx = StageContext(_readonly(x), _readonly(p), _readonly(q), op, block)
    corr_p = plugin.plugin_p(op.times(x, q), ctx.q, _frozen_views(state.history.h_p), ctx)
    if np.shape(corr_p) != p.shape:
        raise ValueError(f"plugin_p returned shape {np.shape(corr_p)}, expected {p.shape}")
    p_dl = p + corr_p
    ctx_q = StageContext(ctx.x, _readonly(p_dl), ctx.q, op, block)
    corr_q = plugin.plugin_q(op.h_times(x, p_dl), ctx_q.p, _frozen_views(state.history.h_q), ctx_q)
    if np.shape(corr_q) != q.shape:
        raise ValueError(f"plugin_q returned shape {np.shape(corr_q)}, expected {q.shape}")
    q_dl = q + corr_q
    x_tilde = op.lowrank_adjoint(p_dl, q_dl)
    x_dl = data_consistency(zero_filled, x_tilde, params.gamma_dl, pattern)
    history = History(state.history.h_p + [p_dl], state.history.h_q + [q_dl])
    return PipelineState(x_dl, p_dl, q_dl, history), StageRecord(block, "dl", x_dl, x_tilde, p_dl, q_dl)


def optimizer_stage(state: PipelineState, params: BlockParams, zero_filled, pattern: SamplingPattern,
                    op: HankelOperator, block: int = 0) -> tuple[PipelineState, StageRecord]:
    p_new = update_P(state.x, state.q, params.beta_p, op)
    q_new = update_Q(state.x, p_new, params.beta_q, op)
    x_tilde = op.lowrank_adjoint(p_new, q_new)
    x_new = data_consistency(zero_filled, x_tilde, params.gamma, pattern)
    history = History(state.history.h_p + [p_new], state.history.h_q + [q_new])
    return PipelineState(x_new, p_new, q_new, history), StageRecord(block, "opt", x_new, x_tilde, p_new, q_new)


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _frozen_views(arrays) -> tuple:
    out = []
    for a in arrays:
        v = a.view()
        v.setflags(write=False)
        out.append(v)
    return tuple(out)


def initial_state(y, pattern: SamplingPattern, rank: int, op: HankelOperator) -> PipelineState:
    x1 = apply_U_star(y, pattern)
    pair = init_factors(x1, op, rank)
    return PipelineState(x1, pair.p, pair.q, History([pair.p], [pair.q]))


def run_block(state: PipelineState, params: BlockParams, plugin: PluginSolver, y, pattern: SamplingPattern,
              op: HankelOperator | None = None, block: int = 0):
    """One full block (plug-in stage then optimizer stage); returns ``(state, records)``."""
    op = op or HankelOperator(default_shape(pattern.n_total))
    zf = apply_U_star(y, pattern)
    state, rec_dl = plugin_stage(state, params, plugin, zf, pattern, op, block)
    state, rec_opt = optimizer_stage(state, params, zf, pattern, op, block)
    return state, [rec_dl, rec_opt]


def _schedule(config: PipelineConfig):
    k = len(config.blocks)
    if config.mode == "ADLR":
        return [(i, st) for i in range(k) for st in ("dl", "opt")]
    if config.mode == "ADLR_D":
        return [(i, "dl") for i in range(k)]
    if config.mode == "ADLR_OD":
        return [(i, "opt") for i in range(k)] + [(i, "dl") for i in range(k)]
    return [(i, "dl") for i in range(k)] + [(i, "opt") for i in range(k)]


@dataclass
class PipelineResult:
    x: np.ndarray
    records: list
    state: PipelineState
    op: HankelOperator

    def diagnostics(self, truth=None, alpha: float = 1e-2) -> list[dict]:
        """Per-stage table: rlne (if ``truth``), effective rank, nuclear norm, losses."""
        rows = []
        for rec in self.records:
            s = np.linalg.svd(self.op.forward(rec.x), compute_uv=False)
            row = {
                "block": rec.block + 1,
                "stage": rec.stage,
                "rlne": rlne(truth, rec.x) if truth is not None else float("nan"),
                "effective_rank": effective_rank_of_matrix(self.op.forward(rec.x)),
                "nuclear_norm": float(s.sum()),
                "loss_dl": float("nan"),
                "loss_opt": float("nan"),
            }
            if truth is not None:
                row["loss_dl" if rec.stage == "dl" else "loss_opt"] = stage_loss(rec, truth, alpha)
            rows.append(row)
        return rows


def run_pipeline(y, pattern: SamplingPattern, config: PipelineConfig, op: HankelOperator | None = None,
                 plugin: PluginSolver | None = None) -> PipelineResult:
    """Run all stages in the order given by ``config.mode``.

    ``ADLR`` alternates plug-in and optimizer stages inside each block,
    ``ADLR_D`` runs plug-in stages only, ``ADLR_OD`` runs K optimizer stages
    then K plug-in stages and ``ADLR_DO`` the reverse.
    """
    y = np.asarray(y, dtype=complex)
    op = op or HankelOperator(default_shape(pattern.n_total))
    rank = min(config.rank_cap, *op.matrix_shape)
    plugin = plugin if plugin is not None else make_plugin(config.plugin, config.plugin_theta)
    zf = apply_U_star(y, pattern)
    state = initial_state(y, pattern, rank, op)
    records = []
    for block, stage in _schedule(config):
        params = config.blocks[block]
        if stage == "dl":
            state, rec = plugin_stage(state, params, plugin, zf, pattern, op, block)
        else:
            state, rec = optimizer_stage(state, params, zf, pattern, op, block)
        if not np.all(np.isfinite(state.x)):
            raise SolverDivergence(f"non-finite values after block {block + 1} ({stage})")
        records.append(rec)
    return PipelineResult(state.x, records, state, op)


def stage_loss(rec: StageRecord, truth, alpha: float = 1e-2) -> float:
    """``|x - truth|^2 + alpha |x_tilde - truth|^2`` for one stage."""
    e1 = rec.x - truth
    e2 = rec.x_tilde - truth
    return float(np.vdot(e1, e1).real + alpha * np.vdot(e2, e2).real)


@dataclass
class LossTable:
    loss_dl: list
    loss_opt: list
    total: float


def compute_losses(records, truth, alpha: float = 1e-2, weights="greedy") -> LossTable:
    """Per-block losses of both stages and their weighted total.

    ``weights`` is ``"greedy"`` (all ones), ``"non_greedy"`` (only the last
    optimizer stage) or a pair of sequences ``(w_dl, w_opt)``.
    """
    truth = np.asarray(truth)
    n_blocks = max(r.block for r in records) + 1
    loss_dl = [math.nan] * n_blocks
    loss_opt = [math.nan] * n_blocks
    for rec in records:
        if rec.x.shape != truth.shape:
            raise ValueError(f"stage output shape {rec.x.shape} != truth shape {truth.shape}")
        (loss_dl if rec.stage == "dl" else loss_opt)[rec.block] = stage_loss(rec, truth, alpha)
    if weights == "greedy":
        w_dl, w_opt = [1.0] * n_blocks, [1.0] * n_blocks
    elif weights == "non_greedy":
        w_dl, w_opt = [0.0] * n_blocks, [0.0] * (n_blocks - 1) + [1.0]
    else:
        w_dl, w_opt = weights
    total = 0.0
    for k in range(n_blocks):
        if not math.isnan(loss_dl[k]):
            total += w_dl[k] * loss_dl[k]
        if not math.isnan(loss_opt[k]):
            total += w_opt[k] * loss_opt[k]
    return LossTable(loss_dl, loss_opt, total)


DIAGNOSTIC_COLUMNS = ("block", "stage", "rlne", "effective_rank", "nuclear_norm", "loss_dl", "loss_opt")


def write_diagnostics_csv(rows, path, header: dict | None = None):
    write_csv(path, DIAGNOSTIC_COLUMNS, rows, header)
