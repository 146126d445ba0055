import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", deadline=None, max_examples=60)
settings.load_profile("ci")

# Published 3x4 fault-signature matrix for the 90 degree station-keeping case.
EQ29 = np.array([
    [3.5178, 5.0833, -0.7511, 9.3522],
    [-3.5178, 5.0833, -0.7511, -9.3522],
    [-0.9393, 1.3572, 0.2006, 2.4971],
])
LEVER = 0.1888
A_GEOM = LEVER / math.cos(math.pi / 4)

ACCEPTANCE_LINES = []


@pytest.fixture
def eq29():
    return EQ29.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s[7:9])):
            terminalreporter.write_line(line)
