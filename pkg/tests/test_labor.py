import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ubi_equilibrium.errors import ConsistencyError, DomainError
from ubi_equilibrium.labor import (
    aggregate_income,
    invert_psi,
    labor_shares,
    labor_state,
    leisure_log_utility,
    perceived_income,
    perceived_incomes_at,
    psi,
    realized_incomes,
    response,
)
from ubi_equilibrium.model import AgentPreferences, DiffusionSpec, EconomyModel, UbiPolicy

neg = st.floats(-5.0, -1e-3)
target = st.floats(-1e4, 1e4)


def two_agents(beta=(-0.2, -0.4), gamma=(-0.3, -0.3), alpha=(0.2, 0.2), w=(2.0, 3.0)):
    agents = [AgentPreferences(a, 1.0, b, g) for a, b, g in zip(alpha, beta, gamma)]
    return EconomyModel(agents, [DiffusionSpec(v) for v in w], DiffusionSpec(1.0), 1.0, [0.5, 0.5], [0.5, 0.5])


def test_psi_symmetric_point():
    v, d1, d2 = psi(0.5, -0.7, -0.7)
    assert v == 0.0
    assert d2 == pytest.approx(0.0, abs=1e-14)


def test_psi_value_example():
    v, _, _ = psi(0.70711, -0.5, -0.5)
    assert v == pytest.approx(1.0, abs=1e-4)


def test_psi_derivative_positive():
    l = np.linspace(0.01, 0.99, 99)
    for b, g in [(-0.1, -3.0), (-2.0, -0.05)]:
        assert np.all(psi(l, b, g)[1] > 0)


@pytest.mark.parametrize("l", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_psi_domain(l):
    with pytest.raises(DomainError):
        psi(l, -0.5, -0.5)


def test_invert_examples():
    assert invert_psi(0.0, -0.2, -0.4) == pytest.approx(1.0 / 3.0, abs=1e-16)
    assert invert_psi(1.0, -0.5, -0.5) == pytest.approx(math.sqrt(0.5), abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(target, neg, neg)
def test_invert_residual_and_interior(c, b, g):
    l = invert_psi(c, b, g)
    assert 0.0 < l < 1.0
    v, d1, _ = psi(l, b, g)
    # attainable floor: rounding of the two terms plus half an ulp of l times psi'
    eps = np.finfo(float).eps
    assert abs(v - c) <= 4 * eps * (abs(b / l) + abs(g / (1.0 - l)) + d1)


@settings(max_examples=300, deadline=None)
@given(target, neg, neg)
def test_swap_symmetry(c, b, g):
    assert invert_psi(-c, g, b) == pytest.approx(1.0 - invert_psi(c, b, g), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(0.01, 50), neg, neg)
def test_invert_is_increasing(c, dc, b, g):
    assert invert_psi(c + dc, b, g) > invert_psi(c, b, g)


def test_invert_vectorised_matches_scalar(rng):
    c = rng.uniform(-20, 20, 50)
    b = rng.uniform(-2, -0.1, 50)
    g = rng.uniform(-2, -0.1, 50)
    vec = invert_psi(c, b, g)
    assert np.array_equal(vec, np.array([invert_psi(*t) for t in zip(c, b, g)]))


def test_invert_extreme_targets_stay_interior():
    for c in (1e15, -1e15, 1e300, -1e300):
        l = invert_psi(c, -0.2, -0.3)
        assert 0.0 < l < 1.0


def test_zero_lambda_gives_closed_form():
    m = two_agents()
    L = labor_shares(m, UbiPolicy(0.0, 0.0), [2.0, 5.0])
    assert L == pytest.approx(m.betas / (m.betas + m.gammas), abs=1e-15)


def test_labor_example_c_equals_one():
    m = two_agents(beta=(-0.5, -0.5), gamma=(-0.5, -0.5), w=(6.25, 6.25))
    L = labor_shares(m, UbiPolicy(0.8, 0.0), m.wage_initial)
    assert L == pytest.approx([math.sqrt(0.5)] * 2, abs=1e-12)


def test_labor_strictly_increasing_in_wage():
    m = two_agents()
    w = np.linspace(0.1, 10, 200)
    L = labor_shares(m, UbiPolicy(0.7, 0.2, 0.5), np.stack([w, w], axis=1))
    assert np.all(np.diff(L, axis=0) > 0)


def test_labor_residual_property(rng):
    m = two_agents()
    p = UbiPolicy(0.7, 0.2, 0.5)
    w = rng.uniform(-5, 20, (1000, 2))
    L = labor_shares(m, p, w)
    v, _, _ = psi(L, m.betas, m.gammas)
    assert np.max(np.abs(v - m.alphas * p.effective_lambda(2) * w)) < 1e-12


def test_leisure_examples():
    assert leisure_log_utility(AgentPreferences(1.0, 0.0, -0.5, -0.5), 0.5) == pytest.approx(math.log(2.0))
    ag = AgentPreferences(0.3, 0.0, -0.2, -0.4)
    vals = leisure_log_utility(ag, np.array([1e-2, 1e-5, 1e-10, 1 - 1e-2, 1 - 1e-5, 1 - 1e-10]))
    assert np.all(np.diff(vals[:3]) > 0) and np.all(np.diff(vals[3:]) > 0)
    assert vals[2] > 10 and vals[5] > 10
    with pytest.raises(DomainError):
        leisure_log_utility(ag, 1.0)


def test_leisure_positive(rng):
    ag = AgentPreferences(0.3, 0.0, -0.2, -0.4)
    assert np.all(leisure_log_utility(ag, rng.uniform(1e-9, 1 - 1e-9, 500)) > 0)


def _state(delta=0.7, w=(2.0, 3.0)):
    m = two_agents(w=w)
    p = UbiPolicy(0.3, 0.5, delta)
    return m, p, labor_state(m, p, 0.0, m.wage_initial)


def test_response_consistency_and_cases():
    m, p, s = _state()
    assert response(0, 1, s.labor[0], s) == s.labor[1]
    assert response(1, 0, s.labor[1], s) == s.labor[0]
    _, _, s0 = _state(delta=0.0)
    assert response(0, 1, 0.9, s0) == s0.labor[1]
    assert response(0, 1, 0.9, s) == pytest.approx(0.7 * 2.0 / 3.0 * (0.9 - s.labor[0]) + s.labor[1])
    with pytest.raises(IndexError):
        response(0, 0, 0.5, s)


def test_response_zero_wage_convention():
    m, p, s = _state(w=(2.0, 0.0))
    assert response(0, 1, 0.123, s) == s.labor[1]


def test_perceived_income_identities():
    m, p, s = _state()
    total = sum(perceived_income(i, s.labor[i], s) for i in range(2))
    assert total == pytest.approx(p.redistributed * float(np.sum(s.wages * s.labor)), abs=1e-12)
    _, p0, s0 = _state(delta=0.0)
    l = 0.4
    wl = s0.wages * s0.labor
    want = p0.lambda_keep * s0.wages[0] * l + p0.lambda_ubi / 2 * (s0.wages[0] * l + wl[1])
    assert perceived_income(0, l, s0) == pytest.approx(want, abs=1e-14)
    assert perceived_income(0, 0.3, s, UbiPolicy(0.0, 0.0, 0.7)) == 0.0


def test_perceived_income_matches_response_definition():
    m, p, s = _state(delta=-0.4)
    l = 0.25
    want = p.lambda_keep * s.wages[0] * l + p.lambda_ubi / 2 * (s.wages[0] * l + s.wages[1] * response(0, 1, l, s))
    assert perceived_income(0, l, s) == pytest.approx(want, abs=1e-14)


def test_vectorised_income_helpers():
    m, p, s = _state()
    eps = realized_incomes(s.wages, s.labor, p)
    assert eps == pytest.approx([perceived_income(i, s.labor[i], s) for i in range(2)], abs=1e-14)
    l = np.array([0.3, 0.6])
    pa = perceived_incomes_at(l, s.wages, s.labor, p)
    assert pa == pytest.approx([perceived_income(i, l[i], s) for i in range(2)], abs=1e-14)


def test_aggregate_income_cases():
    m, p, s = _state()
    inc = aggregate_income(s)
    assert inc.aggregate == pytest.approx(p.redistributed * float(np.sum(s.wages * s.labor)))
    comm = UbiPolicy(0.0, 1.0, 0.3)
    s_c = labor_state(m, comm, 0.0, m.wage_initial)
    assert aggregate_income(s_c).aggregate == pytest.approx(float(np.sum(s_c.wages * s_c.labor)))
    one = EconomyModel([AgentPreferences(0.2, 1.0, -0.2, -0.3)], [DiffusionSpec(2.0)], DiffusionSpec(1.0), 1.0, [1.0], [1.0])
    s1 = labor_state(one, p, 0.0, one.wage_initial)
    assert aggregate_income(s1).aggregate == pytest.approx(p.redistributed * 2.0 * s1.labor[0])


def test_aggregate_income_detects_inconsistency(monkeypatch):
    import ubi_equilibrium.labor as labor

    m, p, s = _state()
    honest = labor.perceived_income
    monkeypatch.setattr(labor, "perceived_income", lambda *a, **k: honest(*a, **k) + 1e-6)
    with pytest.raises(ConsistencyError):
        aggregate_income(s)


def test_income_increasing_in_lambda():
    m = two_agents()
    prev = -np.inf
    for d in np.linspace(-0.5, 2.0, 30):
        p = UbiPolicy(0.3, 0.5, d)
        s = labor_state(m, p, 0.0, m.wage_initial)
        agg = aggregate_income(s).aggregate
        assert agg > prev
        prev = agg
