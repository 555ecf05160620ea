import re
import subprocess
import sys

import numpy as np
import pytest

from hankelrecon import experiments
from hankelrecon.cli import main
from hankelrecon.experiments import ConfigError, ExperimentConfig, parse_config
from hankelrecon.io import read_cplx, read_csv, read_mask, write_cplx, write_mask
from hankelrecon.metrics import rlne
from hankelrecon.parallel import THREADS_ENV, default_threads, ordered_map
from hankelrecon.sampling import full, poisson_gap
from hankelrecon.signal_model import synthesize, table_signal

SMALL = """
[pattern]
rates = 0.25, 0.5
seed = 3

[solver]
max_iters = 60

[run]
trials = 2
"""


def example_config_text():
    doc = experiments.__doc__
    block = doc.split("::", 1)[1]
    return "\n".join(line[4:] for line in block.splitlines())


def test_documented_example_parses():
    cfg = parse_config(example_config_text())
    assert cfg == ExperimentConfig(pattern=cfg.pattern)
    assert cfg.pattern.rates == (0.10, 0.25, 0.50)
    assert cfg.solver.lam_ratio is None and cfg.trials == 10


@pytest.mark.parametrize("text", [
    "[bogus]\nx = 1\n",
    "[solver]\nspeed = 3\n",
    "[pattern]\nrates = 0.0\n",
    "[run]\ntrials = 0\n",
    "[solver]\nname = unet\n",
    "[solver]\nmax_iters = many\n",
])
def test_bad_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_round_trip_values():
    cfg = parse_config(SMALL)
    assert cfg.pattern.rates == (0.25, 0.5) and cfg.pattern.seed == 3
    assert cfg.solver.max_iters == 60 and cfg.trials == 2
    assert cfg.with_seed(9).pattern.seed == 9
    assert cfg.to_dict()["solver"]["beta"] == 20.0


def run_cli(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().err


def test_exit_code_config(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[solver]\nspeed = 3\n")
    code, err = run_cli(["synth", "--config", bad, "--out", tmp_path], capsys)
    assert code == 2
    assert err.startswith("hankelrecon: error:") and err.count("\n") == 1


def test_exit_code_io(tmp_path, capsys):
    code, err = run_cli(["reconstruct", "--input", tmp_path / "missing.cplx", "--mask", tmp_path / "m.mask",
                         "--out", tmp_path], capsys)
    assert code == 3 and "hankelrecon: error:" in err
    (tmp_path / "bad.cplx").write_text("#CPLX v1 3\n1,2\n")
    write_mask(tmp_path / "m.mask", full(3))
    code, _ = run_cli(["reconstruct", "--input", tmp_path / "bad.cplx", "--mask", tmp_path / "m.mask",
                       "--out", tmp_path], capsys)
    assert code == 3


def test_exit_code_divergence(tmp_path, capsys):
    x = np.full(31, np.nan + 0j)
    write_cplx(tmp_path / "nan.cplx", x)
    write_mask(tmp_path / "m.mask", poisson_gap(31, 16, 0))
    cfg = tmp_path / "c.ini"
    cfg.write_text("[solver]\nrank_cap = 4\nmax_iters = 5\n")
    code, err = run_cli(["reconstruct", "--config", cfg, "--input", tmp_path / "nan.cplx",
                         "--mask", tmp_path / "m.mask", "--out", tmp_path], capsys)
    assert code == 4 and "hankelrecon: error:" in err


def test_length_mismatch_is_config_error(tmp_path, capsys):
    write_cplx(tmp_path / "x.cplx", np.ones(10))
    write_mask(tmp_path / "m.mask", full(9))
    code, _ = run_cli(["reconstruct", "--input", tmp_path / "x.cplx", "--mask", tmp_path / "m.mask",
                       "--out", tmp_path], capsys)
    assert code == 2


@pytest.mark.parametrize("solver", ["penalty", "admm", "cs", "svt", "adlr"])
def test_reconstruct_full_rate_is_identity(tmp_path, capsys, solver):
    x = synthesize(table_signal("S2")) + 0.01j
    write_cplx(tmp_path / "x.cplx", x)
    write_mask(tmp_path / "m.mask", full(255))
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[solver]\nname = {solver}\n")
    code, _ = run_cli(["reconstruct", "--config", cfg, "--input", tmp_path / "x.cplx", "--mask", tmp_path / "m.mask",
                       "--out", tmp_path], capsys)
    assert code == 0
    assert rlne(x, read_cplx(tmp_path / "recon.cplx")) < 1e-8
    assert (tmp_path / "trace.csv").exists()


@pytest.mark.parametrize("solver", ["penalty", "adlr", "cs"])
def test_reconstruct_undersampled(tmp_path, capsys, solver):
    x = synthesize(table_signal("S2"))
    pat = poisson_gap(255, 128, 0)
    zero_filled = np.where(pat.mask(), x, 0)
    write_cplx(tmp_path / "x.cplx", x)
    write_mask(tmp_path / "m.mask", pat)
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[solver]\nname = {solver}\nmax_iters = 300\niters = 300\n")
    code, _ = run_cli(["reconstruct", "--config", cfg, "--input", tmp_path / "x.cplx", "--mask", tmp_path / "m.mask",
                       "--out", tmp_path], capsys)
    assert code == 0
    assert rlne(x, read_cplx(tmp_path / "recon.cplx")) < 0.5 * rlne(x, zero_filled)
    cols, rows = read_csv(tmp_path / "trace.csv")
    assert rows


def test_reconstruct_2d(tmp_path, capsys):
    row = synthesize(table_signal("S2"))[:40]
    write_cplx(tmp_path / "x.cplx", np.vstack([row, 2 * row]))
    write_mask(tmp_path / "m.mask", poisson_gap(40, 20, 0))
    code, _ = run_cli(["reconstruct", "--input", tmp_path / "x.cplx", "--mask", tmp_path / "m.mask",
                       "--out", tmp_path], capsys)
    assert code == 0 and read_cplx(tmp_path / "recon.cplx").shape == (2, 40)


def test_synth_and_mask(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL)
    assert run_cli(["synth", "--config", cfg, "--out", tmp_path], capsys)[0] == 0
    clean, noisy = read_cplx(tmp_path / "signal.cplx"), read_cplx(tmp_path / "noisy.cplx")
    np.testing.assert_array_equal(clean, synthesize(table_signal("S2")))
    assert 0 < rlne(clean, noisy) < 0.5
    assert run_cli(["mask", "--config", cfg, "--length", 100, "--out", tmp_path], capsys)[0] == 0
    assert read_mask(tmp_path / "mask_0.25.mask").m == 25
    assert read_mask(tmp_path / "mask_0.50.mask").m == 50


def test_benchmark_outputs_and_determinism(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["benchmark", "--config", cfg, "--out", a], capsys)[0] == 0
    assert run_cli(["benchmark", "--config", cfg, "--threads", 2, "--out", b], capsys)[0] == 0
    for name in ("trials.csv", "summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    text = (a / "summary.csv").read_text()
    assert text.startswith("# tool: ") and "# config: " in text
    cols, rows = read_csv(a / "summary.csv")
    assert [r["rate"] for r in rows] == ["0.25", "0.5"] and all(r["n"] == "2" for r in rows)
    _, trials = read_csv(a / "trials.csv")
    assert len(trials) == 4
    assert read_csv(a / "timings.csv")[0] == ["rate", "trial", "seconds"]


def test_seed_flag_changes_results(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL.replace("trials = 2", "trials = 1"))
    run_cli(["benchmark", "--config", cfg, "--out", tmp_path / "a"], capsys)
    run_cli(["benchmark", "--config", cfg, "--seed", 11, "--out", tmp_path / "b"], capsys)
    assert (tmp_path / "a" / "trials.csv").read_bytes() != (tmp_path / "b" / "trials.csv").read_bytes()


def test_mismatch_command(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[pattern]\nrates = 0.1, 0.25, 0.5\n[mismatch]\nn_signals = 10\n")
    assert run_cli(["mismatch", "--config", cfg, "--out", tmp_path], capsys)[0] == 0
    cols, rows = read_csv(tmp_path / "mismatch.csv")
    assert cols == ["dataset", "rate_or_contrast", "distance"]
    dist = {float(r["rate_or_contrast"]): float(r["distance"]) for r in rows}
    assert min(dist, key=dist.get) == 0.25


def test_plot_is_deterministic(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL.replace("trials = 2", "trials = 1"))
    run_cli(["benchmark", "--config", cfg, "--out", tmp_path], capsys)
    assert run_cli(["plot", tmp_path / "summary.csv", "--out", tmp_path / "p1"], capsys)[0] == 0
    assert run_cli(["plot", tmp_path / "summary.csv", "--out", tmp_path / "p2"], capsys)[0] == 0
    svg = (tmp_path / "p1" / "summary.svg").read_text()
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert svg == (tmp_path / "p2" / "summary.svg").read_text()
    assert not re.search(r"\d{4}-\d{2}-\d{2}", svg)
    code, _ = run_cli(["plot", tmp_path / "summary.csv", "--y", "nope", "--x", "rate", "--out", tmp_path], capsys)
    assert code == 2


def test_threads_env(monkeypatch, tmp_path, capsys):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert default_threads() == 1
    monkeypatch.setenv(THREADS_ENV, "3")
    assert default_threads() == 3
    monkeypatch.setenv(THREADS_ENV, "zero")
    with pytest.raises(ValueError):
        default_threads()
    assert run_cli(["synth", "--out", tmp_path], capsys)[0] == 2
    monkeypatch.setenv(THREADS_ENV, "0")
    assert run_cli(["synth", "--out", tmp_path], capsys)[0] == 2


def test_ordered_map_order():
    assert ordered_map(abs, [-3, 1, -2], workers=2) == [3, 1, 2]
    assert ordered_map(abs, [], workers=4) == []
    with pytest.raises(ValueError):
        ordered_map(abs, [1], workers=0)


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "hankelrecon.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("hankelrecon ")
    res = subprocess.run([sys.executable, "-m", "hankelrecon.cli", "synth", "--config", str(tmp_path / "none.ini")],
                         capture_output=True, text=True)
    assert res.returncode == 3 and res.stderr.startswith("hankelrecon: error:")
