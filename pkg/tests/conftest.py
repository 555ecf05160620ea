import numpy as np
import pytest

from hankelrecon import _fallback, _kernels

from tests.helpers import _core

KERNEL_NAMES = ("hankel_matrix", "hankel_times", "hankel_h_times", "antidiag_mean", "lowrank_antidiag_mean")
BACKENDS = ["python"] + (["cython"] if _core is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    impl = _core if request.param == "cython" else _fallback
    for name in KERNEL_NAMES:
        monkeypatch.setattr(_kernels, name, getattr(impl, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
