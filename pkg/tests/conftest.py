import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(rng, n, cond=10.0):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q @ np.diag(np.geomspace(1.0, cond, n)) @ q.T


def random_lorentzian(rng, n=4):
    """Symmetric matrix with signature (-,-,-,+) near diag(-1,-1,-1,1)."""
    a = rng.normal(scale=0.1, size=(n, n))
    return np.diag([-1.0] * (n - 1) + [1.0]) + 0.5 * (a + a.T)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
