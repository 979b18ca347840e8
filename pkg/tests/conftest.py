import sys

import numpy as np
import pytest

from hlsim import ModelSpec


@pytest.fixture
def small_panel():
    return [ModelSpec.lam(0.0, 8), ModelSpec.lam(0.25, 8), ModelSpec.lam(0.5, 8),
            ModelSpec.lam(1.0, 8), ModelSpec.q(-0.9, 8), ModelSpec.q(-0.5, 8), ModelSpec.q(0.5, 8)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)



def pytest_terminal_summary(terminalreporter):
    module = next((m for name, m in sys.modules.items()
                   if name.endswith("test_acceptance") and hasattr(m, "RESULTS")), None)
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(module.RESULTS, key=lambda s: s[6:8]):
        terminalreporter.write_line(line)
