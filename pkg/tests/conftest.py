import numpy as np
import pytest

from ubi_equilibrium.model import AgentPreferences, DiffusionSpec, EconomyModel, UbiPolicy


def stochastic_economy(gamma=-0.3):
    agents = [AgentPreferences(0.2, 1.0, -0.2, gamma), AgentPreferences(0.2, 1.0, -0.4, gamma)]
    wages = [DiffusionSpec(2.0, 0.1, 0.1), DiffusionSpec(2.0, 0.2, -0.05)]
    return EconomyModel(agents, wages, DiffusionSpec(1.0, 0.1, 0.5), 1.0, [0.5, 0.5], [0.5, 0.5])


def constant_economy(rhos=(0.3, 2.0), dividend=DiffusionSpec(1.0, 0.1, 0.5), horizon=2.0):
    agents = [
        AgentPreferences(0.5, rhos[0], -0.2, -0.3),
        AgentPreferences(1.0, rhos[1], -0.4, -0.3),
    ]
    wages = [DiffusionSpec(2.0), DiffusionSpec(1.5)]
    return EconomyModel(agents, wages, dividend, horizon, [0.3, 0.7], [0.6, 0.4])


@pytest.fixture
def stoch_model():
    return stochastic_economy()


@pytest.fixture
def const_model():
    return constant_economy()


@pytest.fixture
def policy():
    return UbiPolicy(0.7, 0.2, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def rate_economy(r, horizon=2.0, dividend=DiffusionSpec(1.0, 0.1, 0.5)):
    """Constant-wage economy whose interest rate is exactly ``r``.

    Both agents share ``rho``, so ``rho_Sigma = rho`` and
    ``r = rho + alpha_S mu_D - (alpha_S sigma_D)**2 / 2``.
    """
    alpha_sigma = 1.0 / (1.0 / 0.5 + 1.0 / 1.0)
    rho = r - alpha_sigma * dividend.drift + 0.5 * (alpha_sigma * dividend.vol) ** 2
    return constant_economy(rhos=(rho, rho), dividend=dividend, horizon=horizon)


#: one line per acceptance criterion, filled by test_acceptance and echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
