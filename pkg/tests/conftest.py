import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from qrpe.reservoir import QUBIT_SETTING, QUTRIT_SETTING, pair_effects  # noqa: E402

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def qubit_pd():
    return pair_effects(QUBIT_SETTING)


@pytest.fixture(scope="session")
def qutrit_pd():
    return pair_effects(QUTRIT_SETTING, d=3, kind="bosonic")


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request, capsys):
    """Print and record one PASS/FAIL line, then fail the test if needed."""

    def report(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        request.config.stash[ACCEPTANCE_LINES].append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report
