import numpy as np
import pytest

from gaitforge import config as cfgmod


def scenario(**sections):
    """ScenarioConfig from per-section overrides, e.g. ``scenario(loop={"duration": 2})``."""
    return cfgmod.from_dict(sections)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].lstrip("C"))):
            terminalreporter.write_line(line)
