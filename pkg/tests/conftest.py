import time

import numpy as np
import pytest

from pdfrac.config import preset
from pdfrac.material import calibrate
from pdfrac.simulation import run

K_GLASS = 25e9
G_GLASS = 500.0
RHO = 1200.0


@pytest.fixture(scope="session")
def glass():
    """Calibrated plate material at the fine-grid horizon."""
    return calibrate(K_GLASS, G_GLASS, dim=2, density=RHO, horizon=7.5e-4)


@pytest.fixture(scope="session")
def desk_glass():
    """Same material with the 3 mm horizon used on 1 mm desk grids."""
    return calibrate(K_GLASS, G_GLASS, dim=2, density=RHO, horizon=3e-3)


def _timed_run(cfg):
    t0 = time.perf_counter()
    result = run(cfg, keep_snapshots=True)
    result.elapsed = time.perf_counter() - t0
    return result


@pytest.fixture(scope="session")
def edge_crack_run():
    """Edge-cracked plate on the 100 x 100 grid, horizon 3h."""
    return _timed_run(preset("example1", 4, horizon_ratio=3.0))


@pytest.fixture(scope="session")
def notch_run():
    """Notched plate on the 200 x 100 grid, horizon 3h."""
    return _timed_run(preset("example2", 4, horizon_ratio=3.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = {}


def record_criterion(number, title, passed, detail):
    """Store the one-line verdict printed in the acceptance summary."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title} -- {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
