import numpy as np
import pytest

from prequantum import IntegratorSettings


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def tight():
    return IntegratorSettings(rel_tol=1e-11, abs_tol=1e-13, max_step=0.5,
                              convergence_eps=1e-10, convergence_window=1.0)


def random_hermitian(rng, d, scale=1.0):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (z + z.conj().T) / 2


# -- acceptance reporting --------------------------------------------------------

ACCEPTANCE_LINES = {}


class Criterion:
    """Outcome holder for one acceptance criterion; ``passed`` stays False on error."""

    def __init__(self, code, title):
        self.code, self.title = code, title
        self.passed = False
        self.detail = "did not complete"

    def record(self, passed, detail):
        self.passed, self.detail = bool(passed), detail
        return self.passed

    def line(self):
        return f"{self.code} {self.title}: {'PASS' if self.passed else 'FAIL'} ({self.detail})"


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    crit = Criterion(*marker.args)
    yield crit
    ACCEPTANCE_LINES[crit.code] = crit.line()
    print("\n" + crit.line())


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(code, title): acceptance criterion metadata")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for code in sorted(ACCEPTANCE_LINES, key=lambda c: int(c[1:])):
            terminalreporter.write_line(ACCEPTANCE_LINES[code])
