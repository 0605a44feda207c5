import numpy as np
import pytest

from morse_causal.barrier import assemble_drift_barrier
from morse_causal.chart import MorseChart


@pytest.fixture(scope="session")
def chart8():
    return MorseChart(8.0, 2.0)


@pytest.fixture(scope="session")
def drift_cert():
    return assemble_drift_barrier()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def lift_cos_bruteforce(chart, p, d, sigma, n=20001):
    """Best cosine with sigma*grad f over sampled lifts d + lam*rho (oracle)."""
    x1, x2 = p
    nvec = sigma * np.array([-x1, -chart.b * x2, 1.0])
    nvec /= np.linalg.norm(nvec)
    rho = np.array([x1, x2, 1.0])
    lam = np.tan(np.linspace(-np.pi / 2, np.pi / 2, n)[1:-1])
    w = np.array([d[0], d[1], 0.0])[None, :] + lam[:, None] * rho[None, :]
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return float(np.max(w @ nvec))


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion_line(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash[_ACCEPTANCE]

    def emit(number, ok, message):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {message}"
        lines.append((number, line))
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
