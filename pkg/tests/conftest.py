import math
import sys

import pytest

from eddy_ddm.modal_analysis import ImpedanceParams, PhysicalParams

# parameter pairs and physics of the 3D experiment
PAIRS = [(-1e-2, 1e-2), (-1e-2, 1e-1)]


@pytest.fixture
def phys():
    return PhysicalParams(omega=math.pi / 4, mu=1.0, sigma=1.0, R=2.0)


@pytest.fixture(params=PAIRS, ids=["bC=1e-2", "bC=1e-1"])
def imp(request):
    return ImpedanceParams(*request.param)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.VERDICTS):
        terminalreporter.write_line(mod.VERDICTS[k])
