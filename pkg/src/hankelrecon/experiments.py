"""Experiment configuration and the batch protocols behind the CLI.

A config is an INI file; sections give the nesting. Every key is optional.
Annotated example::

    [signal]
    source = table          # table | random | file
    table = S2              # S1 | S2 (source = table)
    path =                  # CPLX file (source = file)

    [noise]
    kind = gaussian         # gaussian | uniform, per real/imag component
    scale = 0.03

    [pattern]
    kind = poisson_gap      # poisson_gap | uniform_random | cartesian_1d | full
    rates = 0.10, 0.25, 0.50
    seed = 0                # trial t derives its seeds from seed + t
    center_fraction = 0.04  # cartesian_1d only

    [solver]
    name = penalty          # penalty | admm | cs | svt | adlr
    beta = 20               # penalty / admm
    lam_ratio =             # lambda / beta; empty = rate-dependent default
    lam =                   # cs / svt weight; empty = rate-dependent default
    rank_cap = 20
    max_iters = 2000
    tol = 1e-6
    iters = 500             # cs / svt
    mode = ADLR             # adlr only
    plugin = zero           # adlr only: zero | svt_shrink
    plugin_theta = 0

    [run]
    trials = 10

    [mismatch]
    reference_rate = 0.25
    n_signals = 100
    log_scaled = false
"""

from __future__ import annotations

import configparser
import math
import time
from dataclasses import asdict, dataclass, field, replace
from functools import partial

import numpy as np

from hankelrecon.apps import SOLVERS, RowSolver, solve_row
from hankelrecon.io import read_cplx
from hankelrecon.metrics import (
    build_histogram,
    effective_rank,
    find_peaks,
    pearson_r2,
    peak_rlne,
    rlne,
    shared_range,
    spectrum,
    wasserstein_01,
)
from hankelrecon.parallel import ordered_map
from hankelrecon.pipeline import MODES, PipelineConfig
from hankelrecon.sampling import KINDS, apply_U, apply_U_star, make_pattern
from hankelrecon.signal_model import (
    NoiseSpec,
    TrainingRanges,
    add_noise,
    sample_noise_std,
    sample_training_model,
    synthesize,
    table_signal,
)


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class SignalSpec:
    source: str = "table"
    table: str = "S2"
    path: str = ""


@dataclass(frozen=True)
class NoiseConfig:
    kind: str = "gaussian"
    scale: float = 0.03


@dataclass(frozen=True)
class PatternSpec:
    kind: str = "poisson_gap"
    rates: tuple[float, ...] = (0.25,)
    seed: int = 0
    center_fraction: float = 0.04


@dataclass(frozen=True)
class SolverSpec:
    name: str = "penalty"
    beta: float = 20.0
    lam_ratio: float | None = None
    lam: float | None = None
    rank_cap: int = 20
    max_iters: int = 2000
    tol: float = 1e-6
    iters: int = 500
    mode: str = "ADLR"
    plugin: str = "zero"
    plugin_theta: float = 0.0

    def row_solver(self) -> RowSolver:
        if self.name in ("penalty", "admm"):
            params = {"beta": self.beta, "rank_cap": self.rank_cap, "max_iters": self.max_iters, "tol": self.tol}
            if self.lam_ratio is not None:
                params["lam"] = self.lam_ratio * self.beta
            return RowSolver(self.name, params)
        if self.name in ("cs", "svt"):
            params = {"iters": self.iters}
            if self.lam is not None:
                params["lam"] = self.lam
            return RowSolver(self.name, params)
        cfg = PipelineConfig(rank_cap=self.rank_cap, mode=self.mode, plugin=self.plugin,
                             plugin_theta=self.plugin_theta)
        return RowSolver("adlr", {"config": cfg})


@dataclass(frozen=True)
class MismatchSpec:
    reference_rate: float = 0.25
    n_signals: int = 100
    log_scaled: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    signal: SignalSpec = field(default_factory=SignalSpec)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    pattern: PatternSpec = field(default_factory=PatternSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    trials: int = 10
    mismatch: MismatchSpec = field(default_factory=MismatchSpec)

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, pattern=replace(self.pattern, seed=seed))


def validate(cfg: ExperimentConfig) -> None:
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if not cfg.pattern.rates or any(not 0 < r <= 1 for r in cfg.pattern.rates):
        raise ConfigError("rates must be non-empty and lie in (0, 1]")
    if cfg.pattern.kind not in KINDS:
        raise ConfigError(f"unknown pattern kind {cfg.pattern.kind!r}")
    if cfg.signal.source not in ("table", "random", "file"):
        raise ConfigError(f"unknown signal source {cfg.signal.source!r}")
    if cfg.signal.source == "file" and not cfg.signal.path:
        raise ConfigError("signal source 'file' needs a path")
    if cfg.signal.source == "table" and cfg.signal.table.upper() not in ("S1", "S2"):
        raise ConfigError(f"unknown table signal {cfg.signal.table!r}")
    if cfg.noise.kind not in ("gaussian", "uniform") or cfg.noise.scale < 0:
        raise ConfigError("noise kind must be gaussian or uniform with scale >= 0")
    if cfg.solver.name not in SOLVERS:
        raise ConfigError(f"unknown solver {cfg.solver.name!r}")
    if cfg.solver.mode not in MODES:
        raise ConfigError(f"unknown mode {cfg.solver.mode!r}")
    if cfg.solver.plugin not in ("zero", "svt_shrink"):
        raise ConfigError(f"unknown plugin {cfg.solver.plugin!r}")
    if cfg.solver.beta <= 0 or cfg.solver.rank_cap < 1 or cfg.solver.max_iters < 1:
        raise ConfigError("solver beta, rank_cap and max_iters must be positive")
    if not 0 < cfg.mismatch.reference_rate <= 1 or cfg.mismatch.n_signals < 1:
        raise ConfigError("invalid mismatch section")


_SECTIONS = {
    "signal": SignalSpec,
    "noise": NoiseConfig,
    "pattern": PatternSpec,
    "solver": SolverSpec,
    "mismatch": MismatchSpec,
}


def _parse_value(raw: str, default, key: str):
    raw = raw.strip()
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, tuple):
        try:
            return tuple(float(v) for v in raw.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"{key}: expected comma-separated numbers, got {raw!r}") from None
    if default is None:
        if raw == "":
            return None
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    try:
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {type(default).__name__}, got {raw!r}") from None
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Build a config from INI text; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}".splitlines()[0]) from None
    parts = {}
    trials = ExperimentConfig.trials
    for section in parser.sections():
        if section == "run":
            for key, raw in parser[section].items():
                if key != "trials":
                    raise ConfigError(f"unknown key [run] {key}")
                trials = _parse_value(raw, 1, "run.trials")
            continue
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        cls = _SECTIONS[section]
        defaults = cls()
        kw = {}
        for key, raw in parser[section].items():
            if not hasattr(defaults, key):
                raise ConfigError(f"unknown key [{section}] {key}")
            kw[key] = _parse_value(raw, getattr(defaults, key), f"{section}.{key}")
        try:
            parts[section] = cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{section}]: {exc}") from None
    return ExperimentConfig(trials=trials, **parts)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _child_seeds(seed: int, n: int) -> list[int]:
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(n)]


def clean_signal(cfg: ExperimentConfig, seed: int) -> np.ndarray:
    """Noise-free ground truth for one trial."""
    if cfg.signal.source == "table":
        return synthesize(table_signal(cfg.signal.table))
    if cfg.signal.source == "random":
        return synthesize(sample_training_model(TrainingRanges(), _child_seeds(seed, 3)[2]))
    x = read_cplx(cfg.signal.path)
    if x.ndim != 1:
        raise ConfigError("benchmark signals must be one-dimensional")
    return x


def run_trial(item, cfg: ExperimentConfig) -> dict:
    """One benchmark trial: sample, reconstruct, score."""
    rate, trial = item
    seed = cfg.pattern.seed + trial
    noise_seed, pattern_seed = _child_seeds(seed, 2)
    truth = clean_signal(cfg, seed)
    noisy = add_noise(truth, NoiseSpec(cfg.noise.kind, cfg.noise.scale, noise_seed))
    pattern = make_pattern(cfg.pattern.kind, truth.shape[0], rate, pattern_seed, cfg.pattern.center_fraction)
    t0 = time.perf_counter()
    x, iters = solve_row(apply_U(noisy, pattern), pattern, cfg.solver.row_solver())
    seconds = time.perf_counter() - t0
    spec_t, spec_x = spectrum(truth), spectrum(x)
    peaks = find_peaks(np.abs(spec_t))
    try:
        per_peak = ";".join(repr(float(v)) for v in peak_rlne(spec_t, spec_x))
    except ValueError:
        per_peak = ""
    r2 = pearson_r2(np.abs(spec_t[peaks]), np.abs(spec_x[peaks])) if peaks.size >= 2 else math.nan
    return {
        "rate": rate,
        "trial": trial,
        "seed": seed,
        "rlne": rlne(truth, x),
        "peak_rlne": per_peak,
        "effective_rank": effective_rank(x),
        "r2": r2,
        "iterations": iters,
        "seconds": seconds,
    }


TRIAL_COLUMNS = ("rate", "trial", "seed", "rlne", "peak_rlne", "effective_rank", "r2", "iterations")
SUMMARY_COLUMNS = ("rate", "n", "rlne_mean", "rlne_std", "effective_rank_mean", "r2_mean", "iterations_mean")


def _std(v):
    return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0


def summarize(rows) -> list[dict]:
    out = []
    for rate in sorted({r["rate"] for r in rows}):
        sel = [r for r in rows if r["rate"] == rate]
        errs = [r["rlne"] for r in sel]
        out.append({
            "rate": rate,
            "n": len(sel),
            "rlne_mean": float(np.mean(errs)),
            "rlne_std": _std(errs),
            "effective_rank_mean": float(np.mean([r["effective_rank"] for r in sel])),
            "r2_mean": float(np.mean([r["r2"] for r in sel])),
            "iterations_mean": float(np.mean([r["iterations"] for r in sel])),
        })
    return out


@dataclass
class ReconReport:
    trials: list
    summary: list

    def __post_init__(self):
        if sum(s["n"] for s in self.summary) != len(self.trials):
            raise ValueError("aggregate counts do not match the trials")


def run_benchmark(cfg: ExperimentConfig, workers: int = 1) -> ReconReport:
    """Sweep ``rates x trials``; rows come back ordered by (rate, trial)."""
    items = [(rate, t) for rate in cfg.pattern.rates for t in range(cfg.trials)]
    rows = ordered_map(partial(run_trial, cfg=cfg), items, workers)
    return ReconReport(rows, summarize(rows))


def _zero_filled_set(rate: float, n_signals: int, seed: int, kind: str, center_fraction: float) -> list:
    signals = []
    for s in _child_seeds(seed, n_signals):
        model_seed, noise_seed, sigma_seed, pattern_seed = _child_seeds(s, 4)
        truth = synthesize(sample_training_model(TrainingRanges(), model_seed))
        sigma = sample_noise_std(TrainingRanges(), sigma_seed)
        noisy = add_noise(truth, NoiseSpec("gaussian", sigma, noise_seed))
        pattern = make_pattern(kind, truth.shape[0], rate, pattern_seed, center_fraction)
        signals.append(apply_U_star(apply_U(noisy, pattern), pattern))
    return signals


MISMATCH_COLUMNS = ("dataset", "rate_or_contrast", "distance")


def run_mismatch(cfg: ExperimentConfig) -> list[dict]:
    """Distance between zero-filled target sets at each rate and a reference set.

    Reference and targets are drawn from independent random-signal streams;
    every comparison bins both sets over their pooled magnitude range.
    """
    mm = cfg.mismatch
    kind = cfg.pattern.kind
    ref_seed, target_seed = _child_seeds(cfg.pattern.seed, 2)
    reference = _zero_filled_set(mm.reference_rate, mm.n_signals, ref_seed, kind, cfg.pattern.center_fraction)
    rows = []
    for rate in cfg.pattern.rates:
        target = _zero_filled_set(rate, mm.n_signals, target_seed, kind, cfg.pattern.center_fraction)
        rng = shared_range(reference, target, log_scaled=mm.log_scaled)
        p = build_histogram(target, mm.log_scaled, rng)
        q = build_histogram(reference, mm.log_scaled, rng)
        rows.append({"dataset": "synthetic", "rate_or_contrast": rate, "distance": wasserstein_01(p, q)})
    return rows
