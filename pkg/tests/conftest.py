import warnings

import numpy as np
import pytest

from kerrlearn.dynamics import MHZ, DataPoint, PhysicalParams
from kerrlearn.fock import FockSpace
from kerrlearn.perturbation import coherent_amplitude


@pytest.fixture(autouse=True)
def _quiet_truncation():
    from kerrlearn.errors import TruncationWarning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        yield


def near_resonant_points(rng, n, p, drive_max=20 * MHZ, half_width=30 * MHZ, time_max=0.05):
    """Points whose coherent amplitude is O(1): drive close to the mode frequency."""
    return [
        DataPoint(rng.uniform(0, drive_max), p.omega_mode + rng.uniform(-half_width, half_width),
                  rng.uniform(0, time_max))
        for _ in range(n)
    ]


def bounded_alpha_pairs(rng, count, p, bound=3.0):
    """Seeded pairs from the default data ranges, keeping |alpha| <= bound."""
    from kerrlearn.data import DataRanges
    r = DataRanges().as_array()
    pairs = []
    while len(pairs) < count:
        a, b = (DataPoint.from_array(rng.random(3) * r) for _ in range(2))
        if abs(coherent_amplitude(a, p).alpha) <= bound and abs(coherent_amplitude(b, p).alpha) <= bound:
            pairs.append((a, b))
    return pairs


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def params100():
    return PhysicalParams(space=FockSpace(100))


ACCEPTANCE_LINES = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    ACCEPTANCE_LINES[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"{ACCEPTANCE_LINES[name]}  {name}")
