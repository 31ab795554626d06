"""Certainty equivalents, aggregate welfare and policy comparison with constant wages.

With constant wages the period utility is ``U_i(t, c, L) = -exp(-rho_i t - alpha_i c) u_i(L)``.
A constant stream ``CE_i`` is worth ``-exp(-alpha_i CE_i) u_i(L_i) F_i`` with
annuity factor ``F_i = (1 - exp(-rho_i T)) / rho_i + exp(-rho_i T)``, and equating
this with the optimal value ``-exp(-alpha_i (X_{i,0}/A_0 + Y_{i,0}))`` gives

    CE_i = X_{i,0}/A_0 + Y_{i,0} + log(u_i(L_i))/alpha_i + log(F_i)/alpha_i.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bsde import BackwardSolution, solve_ode
from .errors import ConsistencyError, DomainError, RegimeError
from .labor import labor_shares, leisure_log_utilities, realized_incomes
from .model import EconomyModel, UbiPolicy, effective_lambda

TWO_ROUTE_TOL = 1e-8
#: ODE steps used when a function solves the backward system itself
WELFARE_STEPS = 1000


def annuity_factor(rho: float, horizon: float) -> float:
    """``(1 - exp(-rho T)) / rho + exp(-rho T)``, equal to ``T + 1`` at ``rho = 0``."""
    if rho == 0.0:
        return horizon + 1.0
    return -math.expm1(-rho * horizon) / rho + math.exp(-rho * horizon)


def _require_constant(model: EconomyModel):
    if not model.constant_wages:
        raise RegimeError("certainty equivalents are defined for constant wages only")
    if np.any(model.wage_initial <= 0.0):
        raise DomainError("certainty equivalents need positive wages")


@dataclass(frozen=True)
class _Initial:
    a0: float
    A0: float
    S0: float
    ybar0: np.ndarray
    labor: np.ndarray
    leisure: np.ndarray
    incomes: np.ndarray


def _initial(solution: BackwardSolution, model: EconomyModel, policy: UbiPolicy) -> _Initial:
    a0, ybar0 = solution.initial_values()
    w = model.wage_initial
    L = labor_shares(model, policy, w)
    A0 = math.exp(a0)
    S0 = A0 * (model.dividend.initial - a0 / model.aggregate.alpha_sigma - float(ybar0.sum()))
    return _Initial(
        a0, A0, S0, ybar0, L, leisure_log_utilities(model, L), realized_incomes(w, L, policy)
    )


def _certainty_equivalents(solution, model, policy) -> np.ndarray:
    s = _initial(solution, model, policy)
    theta0 = np.asarray(model.initial_annuity_shares, dtype=float)
    pi0 = np.asarray(model.initial_stock_shares, dtype=float)
    x0 = theta0 * s.A0 + pi0 * s.S0
    y0 = s.ybar0 + s.incomes - s.leisure
    factors = np.array([annuity_factor(a.rho, model.horizon) for a in model.agents])
    return x0 / s.A0 + y0 + s.leisure + np.log(factors) / model.alphas


def certainty_equivalent(i: int, solution: BackwardSolution, model: EconomyModel, policy: UbiPolicy) -> float:
    """Constant consumption level that gives agent ``i`` its optimal expected utility.

    Raises
    ------
    RegimeError
        If the wages are not constant.
    """
    _require_constant(model)
    return float(_certainty_equivalents(solution, model, policy)[i])


def aggregate_welfare(solution: BackwardSolution, model: EconomyModel, policy: UbiPolicy) -> float:
    """Sum of certainty equivalents, by the closed clearing form.

    The closed form ``1 + D_0 + eps_S - a_0/alpha_S + sum log(factor_i)/alpha_i``
    is cross-checked against the per-agent sum; a disagreement beyond
    ``1e-8`` raises :class:`ConsistencyError`.
    """
    _require_constant(model)
    s = _initial(solution, model, policy)
    logs = sum(math.log(annuity_factor(a.rho, model.horizon)) / a.alpha for a in model.agents)
    closed = 1.0 + model.dividend.initial + float(s.incomes.sum()) - s.a0 / model.aggregate.alpha_sigma + logs
    direct = float(_certainty_equivalents(solution, model, policy).sum())
    if abs(closed - direct) > TWO_ROUTE_TOL:
        raise ConsistencyError(f"aggregate welfare routes disagree: {closed!r} vs {direct!r}")
    return closed


@dataclass(frozen=True)
class WelfareReport:
    ce: np.ndarray
    aggregate: float
    policy: UbiPolicy
    lam: float
    labor: np.ndarray
    total_income: float


def welfare_report(model: EconomyModel, policy: UbiPolicy, solution: BackwardSolution | None = None) -> WelfareReport:
    _require_constant(model)
    if solution is None:
        solution = solve_ode(model, policy, WELFARE_STEPS)
    ce = _certainty_equivalents(solution, model, policy)
    L = labor_shares(model, policy, model.wage_initial)
    return WelfareReport(
        ce=ce,
        aggregate=aggregate_welfare(solution, model, policy),
        policy=policy,
        lam=effective_lambda(policy, model.n_agents),
        labor=L,
        total_income=float(realized_incomes(model.wage_initial, L, policy).sum()),
    )


COMMUNISM = UbiPolicy(0.0, 1.0, 0.0)


def socialism(delta: float) -> UbiPolicy:
    """All income redistributed, with perception parameter ``delta``."""
    return UbiPolicy(0.0, 1.0, float(delta))


@dataclass(frozen=True)
class PolicyRow:
    name: str
    policy: UbiPolicy
    lam: float
    labor: tuple[float, ...]
    total_income: float
    welfare: float

    def as_dict(self) -> dict:
        out = {
            "name": self.name,
            "lambda_keep": self.policy.lambda_keep,
            "lambda_ubi": self.policy.lambda_ubi,
            "delta": self.policy.delta,
            "lambda": self.lam,
        }
        out.update({f"L_{i + 1}": v for i, v in enumerate(self.labor)})
        out.update({"eps_sigma": self.total_income, "sum_CE": self.welfare})
        return out


def compare_policies(
    model: EconomyModel,
    policies: Sequence[UbiPolicy] = (),
    socialism_deltas: Sequence[float] = (0.5, -0.5),
    names: Sequence[str] | None = None,
) -> list[PolicyRow]:
    """Welfare table for ``policies`` followed by communism and socialism rows."""
    entries = [
        (names[k] if names else f"policy_{k + 1}", p) for k, p in enumerate(policies)
    ]
    entries.append(("communism", COMMUNISM))
    entries.extend((f"socialism_delta={d:g}", socialism(d)) for d in socialism_deltas)
    rows = []
    for name, p in entries:
        rep = welfare_report(model, p)
        rows.append(
            PolicyRow(name, p, rep.lam, tuple(float(v) for v in rep.labor), rep.total_income, rep.aggregate)
        )
    return rows
