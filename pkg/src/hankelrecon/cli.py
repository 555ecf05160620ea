"""Command-line front end.

Exit codes: 0 success, 2 malformed configuration or arguments, 3 I/O or
file-format failure, 4 solver divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from hankelrecon import __version__
from hankelrecon.apps import RowFailure, Spectrum2D, reconstruct_nmr, solve_row
from hankelrecon.experiments import (
    MISMATCH_COLUMNS,
    SUMMARY_COLUMNS,
    TRIAL_COLUMNS,
    ConfigError,
    ExperimentConfig,
    clean_signal,
    load_config,
    run_benchmark,
    run_mismatch,
)
from hankelrecon.io import FormatError, read_cplx, read_csv, read_mask, write_cplx, write_csv, write_mask
from hankelrecon.parallel import default_threads
from hankelrecon.pipeline import DIAGNOSTIC_COLUMNS, run_pipeline, write_diagnostics_csv
from hankelrecon.plot import Series, line_chart
from hankelrecon.sampling import apply_U, make_pattern
from hankelrecon.signal_model import NoiseSpec, add_noise
from hankelrecon.solvers import (
    SolverConfig,
    SolverDivergence,
    admm_lrhmf_solve,
    cs_solve,
    default_cs_lambda,
    penalty_solve,
)

EXIT_CONFIG, EXIT_IO, EXIT_DIVERGED = 2, 3, 4


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _provenance(cfg: ExperimentConfig, command: str) -> dict:
    return {"tool": f"hankelrecon {__version__}", "command": command, "config": cfg.to_dict()}


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args) -> int:
    cfg = _config(args)
    out = _outdir(args)
    truth = clean_signal(cfg, cfg.pattern.seed)
    noisy = add_noise(truth, NoiseSpec(cfg.noise.kind, cfg.noise.scale, cfg.pattern.seed))
    write_cplx(out / "signal.cplx", truth)
    write_cplx(out / "noisy.cplx", noisy)
    return 0


def cmd_mask(args) -> int:
    cfg = _config(args)
    out = _outdir(args)
    for rate in cfg.pattern.rates:
        pattern = make_pattern(cfg.pattern.kind, args.length, rate, cfg.pattern.seed, cfg.pattern.center_fraction)
        write_mask(out / f"mask_{rate:.2f}.mask", pattern)
    return 0


def _reconstruct_1d(y, pattern, cfg: ExperimentConfig, out: Path):
    spec = cfg.solver
    solver = spec.row_solver()
    if pattern.m == pattern.n_total:
        write_csv(out / "trace.csv", ("iterations",), [(0,)])
        return solve_row(y, pattern, solver)[0]
    if spec.name in ("penalty", "admm"):
        p = solver.params
        conf = SolverConfig(lam=p.get("lam", SolverConfig.for_rate(pattern.rate, p["beta"]).lam), beta=p["beta"],
                            rank_cap=p["rank_cap"], max_iters=p["max_iters"], tol=p["tol"])
        fn = penalty_solve if spec.name == "penalty" else admm_lrhmf_solve
        x, trace = fn(y, pattern, conf)
        trace.to_csv(out / "trace.csv", include_time=False)
        return x
    if spec.name == "adlr":
        res = run_pipeline(y, pattern, solver.params["config"])
        write_diagnostics_csv(res.diagnostics(), out / "trace.csv")
        return res.x
    if spec.name == "cs":
        x, hist = cs_solve(y, pattern, spec.lam if spec.lam is not None else default_cs_lambda(pattern.rate), spec.iters)
        write_csv(out / "trace.csv", ("iter", "objective"), [(i + 1, v) for i, v in enumerate(hist)])
        return x
    x, iters = solve_row(y, pattern, solver)
    write_csv(out / "trace.csv", ("iterations",), [(iters,)])
    return x


def cmd_reconstruct(args) -> int:
    cfg = _config(args)
    data = read_cplx(args.input)
    pattern = read_mask(args.mask)
    out = _outdir(args)
    if data.shape[-1] != pattern.n_total:
        raise ConfigError(f"input length {data.shape[-1]} does not match mask length {pattern.n_total}")
    if data.ndim == 1:
        x = _reconstruct_1d(apply_U(data, pattern), pattern, cfg, out)
    elif data.ndim == 2:
        recon = reconstruct_nmr(Spectrum2D(data), pattern, cfg.solver.row_solver(), workers=args.threads)
        x = recon.data
        write_csv(out / "trace.csv", ("row",), [(i,) for i in range(x.shape[0])])
    else:
        raise ConfigError("reconstruct expects a 1D signal or a 2D direct x indirect array")
    write_cplx(out / "recon.cplx", x)
    return 0


def cmd_benchmark(args) -> int:
    cfg = _config(args)
    out = _outdir(args)
    report = run_benchmark(cfg, workers=args.threads)
    head = _provenance(cfg, "benchmark")
    write_csv(out / "trials.csv", TRIAL_COLUMNS, report.trials, head)
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, report.summary, head)
    # wall time varies run to run; keep it out of the reproducible files
    write_csv(out / "timings.csv", ("rate", "trial", "seconds"), report.trials)
    return 0


def cmd_mismatch(args) -> int:
    cfg = _config(args)
    out = _outdir(args)
    write_csv(out / "mismatch.csv", MISMATCH_COLUMNS, run_mismatch(cfg), _provenance(cfg, "mismatch"))
    return 0


_PLOT_DEFAULTS = {
    "rlne_mean": ("rate", "rlne_mean", "rlne_std"),
    "distance": ("rate_or_contrast", "distance", None),
    "loss_opt": ("block", "rlne", None),
}


def cmd_plot(args) -> int:
    out = _outdir(args)
    for path in args.input:
        columns, rows = read_csv(path)
        xcol, ycol, ecol = args.x, args.y, args.err
        if ycol is None:
            for key, cols in _PLOT_DEFAULTS.items():
                if key in columns:
                    xcol, ycol, ecol = xcol or cols[0], cols[1], ecol or cols[2]
                    break
            else:
                raise ConfigError(f"{path}: cannot infer columns to plot; pass --x and --y")
        missing = [c for c in (xcol, ycol, ecol) if c and c not in columns]
        if missing:
            raise ConfigError(f"{path}: missing column(s) {', '.join(missing)}")
        if columns == list(DIAGNOSTIC_COLUMNS):
            rows = [r for r in rows if r["stage"] == "opt"]
        xs = [float(r[xcol]) for r in rows]
        ys = [float(r[ycol]) for r in rows]
        errs = [float(r[ecol]) for r in rows] if ecol else None
        svg = line_chart([Series(Path(path).stem, xs, ys, errs)], title=Path(path).name, xlabel=xcol, ylabel=ycol)
        (out / (Path(path).stem + ".svg")).write_text(svg, encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hankelrecon", description="Low-rank Hankel reconstruction toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment config")
    common.add_argument("--seed", type=int, help="base seed (overrides [pattern] seed)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes (default: $HANKELRECON_THREADS or 1)")
    common.add_argument("--out", default=".", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("synth", parents=[common], help="write clean and noisy test signals").set_defaults(func=cmd_synth)
    p = sub.add_parser("mask", parents=[common], help="write sampling masks for each configured rate")
    p.add_argument("--length", type=int, default=255)
    p.set_defaults(func=cmd_mask)
    p = sub.add_parser("reconstruct", parents=[common], help="reconstruct a CPLX signal from a MASK")
    p.add_argument("--input", required=True)
    p.add_argument("--mask", required=True)
    p.set_defaults(func=cmd_reconstruct)
    sub.add_parser("benchmark", parents=[common], help="sweep rates x trials").set_defaults(func=cmd_benchmark)
    sub.add_parser("mismatch", parents=[common], help="histogram distance vs sampling rate").set_defaults(func=cmd_mismatch)
    p = sub.add_parser("plot", parents=[common], help="render report CSVs as SVG")
    p.add_argument("input", nargs="+")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--err")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is None:
            args.threads = default_threads()
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, FormatError):
            return _fail(EXIT_IO, exc)
        return _fail(EXIT_CONFIG, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except (SolverDivergence, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_DIVERGED, exc)
    except RowFailure as exc:
        code = EXIT_DIVERGED if isinstance(exc.cause, (SolverDivergence, np.linalg.LinAlgError)) else EXIT_CONFIG
        return _fail(code, exc)


def _fail(code: int, exc: BaseException) -> int:
    msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
    print(f"hankelrecon: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
