import math

import numpy as np
import pytest

from ubi_equilibrium.errors import (
    InvalidDiffusion,
    InvalidPolicy,
    InvalidPreferences,
    LengthMismatch,
    ShareImbalance,
    ValidationError,
)
from ubi_equilibrium.model import (
    AgentPreferences,
    DiffusionSpec,
    EconomyModel,
    UbiPolicy,
    aggregate_preferences,
    effective_lambda,
    nonpositive_wage_mask,
    validate_economy,
    validate_policy,
)


def test_effective_lambda_delta_one_recovers_keep_plus_ubi():
    p = UbiPolicy(0.3, 0.5, 1.0)
    for n in (1, 2, 7):
        assert effective_lambda(p, n) == pytest.approx(0.8, abs=1e-15)


def test_effective_lambda_delta_zero_single_share():
    assert effective_lambda(UbiPolicy(0.2, 0.6, 0.0), 3) == pytest.approx(0.2 + 0.6 / 3)


def test_effective_lambda_negative_band_stays_positive():
    k, u, n = 0.2, 0.6, 3
    lower = -1.0 / (n - 1) * (1.0 + k / u * n)
    for d in np.linspace(lower + 1e-6, 0.0, 7):
        assert effective_lambda(UbiPolicy(k, u, d), n) > 0


def test_aggregate_preferences_harmonic():
    agents = [AgentPreferences(0.5, 0.1, -1, -1), AgentPreferences(2.0, 0.3, -1, -1)]
    agg = aggregate_preferences(agents)
    assert agg.alpha_sigma == pytest.approx(1.0 / (2.0 + 0.5))
    assert agg.rho_sigma == pytest.approx(agg.alpha_sigma * (0.1 / 0.5 + 0.3 / 2.0))


def test_identical_agents_aggregate():
    agents = [AgentPreferences(0.4, 0.7, -1, -1)] * 4
    agg = aggregate_preferences(agents)
    assert agg.alpha_sigma == pytest.approx(0.1)
    assert agg.rho_sigma == pytest.approx(0.7)


def _model(**kw):
    base = dict(
        agents=[AgentPreferences(0.2, 1.0, -0.2, -0.3), AgentPreferences(0.2, 1.0, -0.4, -0.3)],
        wages=[DiffusionSpec(2.0), DiffusionSpec(2.0)],
        dividend=DiffusionSpec(1.0, 0.1, 0.5),
        horizon=1.0,
        initial_stock_shares=[0.5, 0.5],
        initial_annuity_shares=[0.5, 0.5],
    )
    base.update(kw)
    return EconomyModel(**base)


def test_valid_model_passes():
    m = _model()
    assert validate_economy(m, UbiPolicy(0.7, 0.2, 0.5)) is m


def test_all_violations_are_collected():
    m = _model(
        agents=[AgentPreferences(-1.0, 1.0, 0.2, -0.3), AgentPreferences(0.2, -1.0, -0.4, 0.1)],
        initial_stock_shares=[0.5, 0.6],
        initial_annuity_shares=[1.0],
    )
    with pytest.raises(ValidationError) as info:
        validate_economy(m, UbiPolicy(0.9, 0.3))
    kinds = info.value.kinds()
    assert {InvalidPreferences, ShareImbalance, LengthMismatch, InvalidPolicy} <= kinds
    assert len(info.value.violations) >= 6


@pytest.mark.parametrize(
    "policy",
    [UbiPolicy(-0.1, 0.2), UbiPolicy(1.1, 0.0), UbiPolicy(0.5, -0.1), UbiPolicy(0.6, 0.5), UbiPolicy(math.nan, 0.1)],
)
def test_bad_policies(policy):
    with pytest.raises(ValidationError) as info:
        validate_policy(policy)
    assert info.value.kinds() == {InvalidPolicy}


def test_nonfinite_diffusion_and_horizon():
    m = _model(dividend=DiffusionSpec(math.inf), horizon=0.0)
    with pytest.raises(ValidationError) as info:
        validate_economy(m)
    assert info.value.kinds() == {InvalidDiffusion}


def test_validation_error_is_value_error():
    with pytest.raises(ValueError):
        validate_policy(UbiPolicy(2.0, 0.0))


def test_wages_at_shape_and_values():
    m = _model(wages=[DiffusionSpec(2.0, 0.1, 0.1), DiffusionSpec(1.0, 0.0, -0.5)])
    x = np.array([[0.0, 1.0], [2.0, -1.0]])
    w = m.wages_at(0.5, x)
    assert w.shape == (2, 2, 2)
    assert w[0, 1, 0] == pytest.approx(2.0 + 0.05 + 0.1)
    assert w[1, 1, 1] == pytest.approx(1.0 + 0.5)


def test_nonpositive_wage_mask():
    mask = nonpositive_wage_mask(np.array([[1.0, 2.0], [0.0, 1.0], [1.0, -3.0]]))
    assert mask.tolist() == [False, True, True]


def test_model_is_hashable_and_list_inputs_normalised():
    m = _model()
    assert isinstance(m.agents, tuple)
    hash(m)


def test_with_initial_wages():
    m = _model().with_initial_wages(3.0)
    assert m.wage_initial.tolist() == [3.0, 3.0]
