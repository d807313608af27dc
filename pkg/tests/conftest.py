import numpy as np
import pytest

from whitham_soliton import PeriodicGrid


def smooth_random(grid: PeriodicGrid, rng, amplitude=0.1, modes=12, width=None):
    """Random band-limited bump: a few low Fourier modes under a Gaussian envelope."""
    x = grid.x
    width = width or grid.half_length / 4
    f = np.zeros_like(x)
    for k in range(1, modes + 1):
        a, b = rng.normal(size=2) / k
        f += a * np.cos(k * x / width) + b * np.sin(k * x / width)
    f *= np.exp(-((x - rng.uniform(-1, 1) * width / 4) / width) ** 2)
    return amplitude * f / np.max(np.abs(f))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run
# ---------------------------------------------------------------------------

_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _acceptance.setdefault(name, report.outcome)
        if report.outcome != "passed":
            _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        status = "PASS" if _acceptance[name] == "passed" else "FAIL"
        label = name.removeprefix("test_").replace("_", " ")
        terminalreporter.write_line(f"{status}  {label}")
