"""Shared fixtures.

The expensive objects (solved equilibria, targeting-rule coefficients) are
session-scoped so the whole suite pays for them once.
"""

import pytest

from riskcap.analytic_core import (
    baseline_two_agent,
    planner_gammas,
    solve_two_period_oracle,
)


@pytest.fixture(scope="session")
def negishi_params():
    return baseline_two_agent()


@pytest.fixture(scope="session")
def utilitarian_params():
    return baseline_two_agent(negishi=False)


@pytest.fixture(scope="session")
def negishi_eq(negishi_params):
    return solve_two_period_oracle(negishi_params)


@pytest.fixture(scope="session")
def utilitarian_eq(utilitarian_params):
    return solve_two_period_oracle(utilitarian_params)


@pytest.fixture(scope="session")
def rule_gammas(utilitarian_params):
    return planner_gammas(utilitarian_params)
