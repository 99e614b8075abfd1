from __future__ import annotations

import time

import pytest

from bellrand.quantum import assemblage_of, singlet_with_visibility
from bellrand.randomness import GuessingProblem, Settings, di_guessing_probability, simulated_behavior
from bellrand.steering import SteeringProblem, steering_guessing_probability

V_EXP = 0.997
POVM_INPUT = 3  # 0-based index of the trine input
SUITE_BUDGET_S = 600.0

ACCEPTANCE: list[str] = []
_START = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - _START
    tr = terminalreporter
    tr.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":").split("/")[0])):
        tr.write_line(line)
    verdict = "PASS" if elapsed < SUITE_BUDGET_S else "FAIL"
    tr.write_line(f"{verdict} criterion 11 runtime: full suite {elapsed:.0f} s (budget {SUITE_BUDGET_S:.0f} s)")


@pytest.fixture(scope="session")
def povm_settings():
    return Settings.chained(3, True)


@pytest.fixture(scope="session")
def proj_settings():
    return Settings.chained(3, False)


@pytest.fixture(scope="session")
def behavior_exp(povm_settings):
    return simulated_behavior(V_EXP, povm_settings)


@pytest.fixture(scope="session")
def behavior_exp_proj(proj_settings):
    return simulated_behavior(V_EXP, proj_settings)


@pytest.fixture(scope="session")
def di_povm_exp(behavior_exp):
    return di_guessing_probability(GuessingProblem.from_behavior(behavior_exp, POVM_INPUT))


@pytest.fixture(scope="session")
def di_proj_exp(behavior_exp_proj):
    return di_guessing_probability(GuessingProblem.from_behavior(behavior_exp_proj, 0))


@pytest.fixture(scope="session")
def di_proj_ideal(proj_settings):
    return di_guessing_probability(GuessingProblem.from_behavior(simulated_behavior(1.0, proj_settings), 0))


@pytest.fixture(scope="session")
def assemblage_exp(povm_settings):
    alice, _ = povm_settings.measurements()
    return assemblage_of(singlet_with_visibility(V_EXP), alice)


@pytest.fixture(scope="session")
def steering_povm_exp(assemblage_exp):
    return steering_guessing_probability(SteeringProblem(assemblage_exp, POVM_INPUT))
