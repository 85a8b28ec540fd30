import numpy as np
import pytest

from mvvol import ModelParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def params2():
    return ModelParams(lambda0=[0.05, 0.05], lambda1=[0.90, 0.90], lambda2=[0.05, 0.05],
                       theta1=0.02, theta2=0.95, dof=8.0,
                       rbar=[[1.0, 0.4], [0.4, 1.0]])


CRITERIA = {}


def record_criterion(number, passed, detail):
    """Remember one acceptance verdict for the end-of-run summary."""
    CRITERIA[number] = (bool(passed), detail)
    print(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
