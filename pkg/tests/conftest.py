import sys

import pytest

from lnmarkov import flat_curve, solve


@pytest.fixture(scope="session")
def flat20():
    return flat_curve("0.05", 20, "0.25", psi="0.3", precision_bits=240)


@pytest.fixture(scope="session")
def solved20(flat20):
    return solve(flat20)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance one-liners so they survive output capture."""
    # Grab the module instance pytest actually ran (importing it afresh here
    # would hand back an empty copy under namespace-package resolution).
    mod = sys.modules.get("tests.test_acceptance") or sys.modules.get(
        "test_acceptance"
    )
    lines = getattr(mod, "SUMMARY_LINES", None) if mod else None
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
