import os
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from orchestrated_ge.equilibrium import TatonnementConfig, solve
from orchestrated_ge.scenario import load_scenario
from orchestrated_ge.synthetic import random_economy

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def reference():
    sc = load_scenario("paper-6.3")
    econ = sc.economy()
    config = sc.config()
    rep = solve(econ, config, sc.initial_state(econ), keep_history=True)
    return sc, econ, config, rep


@pytest.fixture(scope="session")
def regime_solutions():
    """Five contraction-regime random economies solved tightly."""
    out = []
    for seed in range(5):
        econ = random_economy(seed)
        config = TatonnementConfig(alpha=0.3, gamma_A=0.3, tau=2.7, tol=1e-13, seed=seed)
        out.append((econ, config, solve(econ, config, record_trace=False)))
    return out


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
