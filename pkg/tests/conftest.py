import math
import os

import numpy as np
import pytest

from waveguide_ed import ModelParams

PHASES = [0.02, 0.2, 1.0, math.pi + 0.3]


@pytest.fixture
def rng():
    return np.random.default_rng(20201015)


@pytest.fixture(params=PHASES, ids=lambda p: f"phi={p:.3g}")
def phase(request):
    return request.param


def params(n, phase=0.02, **kw):
    return ModelParams(n_atoms=n, phase=phase, **kw)


ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption("--large", action="store_true", default=False,
                     help="run the N=42 acceptance criteria (also enabled by WAVEGUIDE_ED_LARGE=1)")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def large_enabled(config) -> bool:
    return bool(config.getoption("--large")) or os.environ.get("WAVEGUIDE_ED_LARGE") == "1"
