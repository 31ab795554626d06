"""Continuous-time equilibrium with labor-leisure choice and universal basic income.

Typical use::

    from ubi_equilibrium import load_economy, solve, simulate, market_analytics
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .bsde import BackwardSolution, mc_crosscheck, solve, solve_ode, solve_pde
from .config import economy_from_mapping, load_mapping, parse_policy
from .equilibrium import (
    Deviation,
    build_prices,
    check_clearing,
    martingale_test,
    simulate,
    strategies,
)
from .errors import *  # noqa: F401,F403
from .ito import market_analytics, sweep_market
from .labor import invert_psi, labor_shares, psi
from .model import (
    AgentPreferences,
    DiffusionSpec,
    EconomyModel,
    UbiPolicy,
    effective_lambda,
    validate_economy,
)
from .welfare import aggregate_welfare, certainty_equivalent, compare_policies


def load_economy(path):
    """Economy model from a YAML or JSON file."""
    return economy_from_mapping(load_mapping(path))
