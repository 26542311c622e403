"""Shared fixtures: kernel warm-up and the acceptance-criteria report."""

import numpy as np
import pytest

import polyhmc as ph
from polyhmc.integrator import LeapfrogConfig, leapfrog_step

# name -> "PASS -- detail" / "FAIL -- detail", printed at the end of the run
_CRITERIA = {}


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the jitted kernels once so timed tests see steady-state cost."""
    P = ph.make_preset("hypercube", 2, 0.5)
    V = ph.UniformTarget()
    cfg = ph.ChainConfig(n_iters=3, h0=0.05, seed=0)
    ph.run_chain(V, P, cfg)
    z = ph.PhasePoint(np.zeros(2), np.full(2, 0.1))
    leapfrog_step(P, z, LeapfrogConfig(h=0.05))
    S = ph.make_preset("simplex", 2)
    ph.metric_state(S, S.center)


@pytest.fixture
def criterion(request):
    """Record one acceptance-criterion outcome, then assert it."""

    def check(name, passed, detail):
        _CRITERIA[name] = f"{'PASS' if passed else 'FAIL'} -- {detail}"
        assert passed, f"{name}: {detail}"

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        terminalreporter.write_line(f"{name}: {_CRITERIA[name]}")
