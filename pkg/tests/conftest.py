import numpy as np
import pytest
from scipy.signal import lsim


def _brute_force_objective(ground, target, zeta=0.05):
    """Independent oracle: lsim response per period, then an explicit double loop."""
    x = ground.samples
    t = ground.time
    total = 0.0
    for i, T in enumerate(target.periods.periods):
        w = 2 * np.pi / T
        # relative motion state space; output is the absolute acceleration
        A = [[0.0, 1.0], [-w * w, -2 * zeta * w]]
        B = [[0.0], [-1.0]]
        C = [[-w * w, -2 * zeta * w]]
        D = [[0.0]]
        _, acc, _ = lsim((A, B, C, D), x, t, interp=True)
        for j, tj in enumerate(target.times.times):
            k = int(round(tj / ground.dt))
            peak = 0.0
            for q in range(k + 1):
                peak = max(peak, abs(acc[q]))
            total += (peak - target.values[i, j]) ** 2
    return total


@pytest.fixture
def brute_force_objective():
    return _brute_force_objective


_ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)``; printed in the terminal summary."""

    def record(number, passed, detail):
        _ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
