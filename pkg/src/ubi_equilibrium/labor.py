"""Labor choice: the log-marginal-utility map ``psi`` and its inverse, optimal
labor shares, leisure log-utility, response functions and perceived income.

Every numeric function broadcasts over numpy arrays; agent parameters are
passed as arrays of shape ``(I,)`` against wage arrays of shape ``(..., I)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DomainError
from .model import AgentPreferences, EconomyModel, UbiPolicy, effective_lambda

#: bracket offset for the Newton fallback of :func:`invert_psi`
BRACKET_EPS = 1e-12


def _check_open_unit(l):
    l = np.asarray(l, dtype=float)
    if np.any(~((l > 0.0) & (l < 1.0))):
        raise DomainError("labor share must lie strictly inside (0, 1)")
    return l


def psi(l, beta, gamma):
    """Return ``(psi, psi', psi'')`` for ``psi(l) = u'(l)/u(l) = beta/l - gamma/(1-l)``.

    ``psi'`` is strictly positive whenever ``beta, gamma < 0``.
    """
    l = _check_open_unit(l)
    m = 1.0 - l
    value = beta / l - gamma / m
    d1 = -beta / l**2 - gamma / m**2
    d2 = 2.0 * beta / l**3 - 2.0 * gamma / m**3
    return value, d1, d2


def _psi_raw(l, beta, gamma):
    return beta / l - gamma / (1.0 - l)


def _psi_prime_raw(l, beta, gamma):
    return -beta / l**2 - gamma / (1.0 - l) ** 2


def invert_psi(c, beta, gamma):
    """Unique ``l`` in (0, 1) with ``psi(l) = c``.

    Clearing denominators gives ``c l**2 - (c + beta + gamma) l + beta = 0``.
    The roots come from the cancellation-free pair ``q / c`` and ``beta / q``;
    the discriminant is written as ``(c + gamma - beta)**2 + 4 beta gamma``, a
    sum of positive terms.  One Newton polish step follows, kept only if it
    lowers the residual.  ``c = 0`` returns ``beta / (beta + gamma)`` exactly.
    """
    c, beta, gamma = np.broadcast_arrays(
        np.asarray(c, dtype=float), np.asarray(beta, dtype=float), np.asarray(gamma, dtype=float)
    )
    scalar = c.ndim == 0
    c, beta, gamma = np.atleast_1d(c, beta, gamma)

    b = -(c + beta + gamma)
    with np.errstate(over="ignore", invalid="ignore"):
        disc = (c + gamma - beta) ** 2 + 4.0 * beta * gamma
        sign_b = np.where(b >= 0.0, 1.0, -1.0)
        q = -0.5 * (b + sign_b * np.sqrt(disc))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r_small = beta / q
        r_big = np.where(c != 0.0, q / c, np.nan)

    ok_small = (r_small > 0.0) & (r_small < 1.0)
    ok_big = (r_big > 0.0) & (r_big < 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        res_small = np.where(ok_small, np.abs(_psi_raw(r_small, beta, gamma) - c), np.inf)
        res_big = np.where(ok_big, np.abs(_psi_raw(r_big, beta, gamma) - c), np.inf)
    l = np.where(res_big < res_small, r_big, r_small)
    res = np.minimum(res_small, res_big)

    bad = ~np.isfinite(res)
    if np.any(bad):
        l = l.copy()
        l[bad] = _bracketed_newton(c[bad], beta[bad], gamma[bad])

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        resid = _psi_raw(l, beta, gamma) - c
        step = resid / _psi_prime_raw(l, beta, gamma)
        cand = l - step
        inside = (cand > 0.0) & (cand < 1.0)
        better = inside & (
            np.abs(_psi_raw(np.where(inside, cand, 0.5), beta, gamma) - c) < np.abs(resid)
        )
    l = np.where(better, cand, l)
    # at c = 0 the quadratic degenerates to a linear equation with this exact root
    l = np.where(c == 0.0, beta / (beta + gamma), l)
    return l[0] if scalar else l


def _bracketed_newton(c, beta, gamma, iters=200):
    """Safeguarded Newton on ``[eps, 1 - eps]``: bisect whenever Newton leaves the bracket."""
    lo = np.full_like(c, BRACKET_EPS)
    hi = np.full_like(c, 1.0 - BRACKET_EPS)
    l = 0.5 * (lo + hi)
    for _ in range(iters):
        f = _psi_raw(l, beta, gamma) - c
        lo = np.where(f < 0, l, lo)
        hi = np.where(f >= 0, l, hi)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            nl = l - f / _psi_prime_raw(l, beta, gamma)
        ok = (nl > lo) & (nl < hi)
        new = np.where(ok, nl, 0.5 * (lo + hi))
        if np.all(np.abs(new - l) <= 4e-16 * np.maximum(new, 1.0 - new)):
            l = new
            break
        l = new
    return l


def labor_shares(model: EconomyModel, policy: UbiPolicy, wages) -> np.ndarray:
    """Optimal labor shares ``L_i = psi_i^{-1}(alpha_i * lambda * w_i)``."""
    lam = effective_lambda(policy, model.n_agents)
    wages = np.asarray(wages, dtype=float)
    return invert_psi(model.alphas * lam * wages, model.betas, model.gammas)


def leisure_log_utility(agent: AgentPreferences, L) -> np.ndarray | float:
    """``(1/alpha) log u(L)``; strictly positive because ``beta, gamma < 0``."""
    L = _check_open_unit(L)
    out = (agent.beta * np.log(L) + agent.gamma * np.log1p(-L)) / agent.alpha
    return out[()] if out.ndim == 0 else out


def leisure_log_utilities(model: EconomyModel, L) -> np.ndarray:
    """Vectorised :func:`leisure_log_utility` over the agent axis."""
    L = np.asarray(L, dtype=float)
    return (model.betas * np.log(L) + model.gammas * np.log1p(-L)) / model.alphas


@dataclass(frozen=True)
class LaborState:
    time: float
    wages: np.ndarray
    labor: np.ndarray
    leisure_log_utility: np.ndarray
    policy: UbiPolicy

    @property
    def n_agents(self) -> int:
        return len(self.wages)


@dataclass(frozen=True)
class IncomeState:
    perceived: np.ndarray
    aggregate: float


def labor_state(model: EconomyModel, policy: UbiPolicy, t: float, wages) -> LaborState:
    wages = np.asarray(wages, dtype=float)
    L = labor_shares(model, policy, wages)
    return LaborState(float(t), wages, L, leisure_log_utilities(model, L), policy)


def response(i: int, j: int, l, state: LaborState):
    """Agent ``i``'s perception of agent ``j``'s labor when ``i`` works ``l``.

    Affine: ``delta * w_i / w_j * (l - L_i) + L_j``, and exactly ``L_j`` when
    ``w_j == 0``.
    """
    if i == j:
        raise IndexError("response functions are only defined for i != j")
    w, L = state.wages, state.labor
    if w[j] == 0.0:
        return np.zeros_like(np.asarray(l, dtype=float)) + L[j]
    return state.policy.delta * w[i] / w[j] * (np.asarray(l, dtype=float) - L[i]) + L[j]


def perceived_income(i: int, l, state: LaborState, policy: UbiPolicy | None = None):
    """Income agent ``i`` perceives when choosing labor ``l`` (others' responses folded in)."""
    policy = state.policy if policy is None else policy
    n = state.n_agents
    lam = effective_lambda(policy, n)
    w, L = state.wages, state.labor
    others = float(np.sum(w * L) - w[i] * L[i])
    return w[i] * lam * np.asarray(l, dtype=float) + policy.lambda_ubi / n * (
        others - policy.delta * (n - 1) * w[i] * L[i]
    )


def realized_incomes(wages, labor, policy: UbiPolicy) -> np.ndarray:
    """On-equilibrium incomes ``eps_i(L_i) = lambda_keep w_i L_i + (lambda_ubi/I) sum_j w_j L_j``.

    Vectorised over leading axes; the delta terms cancel exactly at ``l = L_i``.
    """
    wl = np.asarray(wages) * np.asarray(labor)
    n = wl.shape[-1]
    return policy.lambda_keep * wl + policy.lambda_ubi / n * wl.sum(axis=-1, keepdims=True)


def perceived_incomes_at(l, wages, labor, policy: UbiPolicy) -> np.ndarray:
    """Vectorised perceived income of every agent ``i`` at its own choice ``l[..., i]``."""
    wages, labor, l = np.asarray(wages), np.asarray(labor), np.asarray(l)
    n = wages.shape[-1]
    lam = effective_lambda(policy, n)
    wl = wages * labor
    others = wl.sum(axis=-1, keepdims=True) - wl
    return wages * lam * l + policy.lambda_ubi / n * (others - policy.delta * (n - 1) * wl)


def aggregate_income(state: LaborState, policy: UbiPolicy | None = None, tol: float = 1e-12) -> IncomeState:
    """Aggregate income ``(lambda_keep + lambda_ubi) sum_i w_i L_i``.

    Cross-checked against the sum of perceived incomes at ``l = L_i``; a
    mismatch beyond ``tol`` (relative to the income scale) raises
    :class:`ConsistencyError`.
    """
    policy = state.policy if policy is None else policy
    perceived = np.array(
        [float(perceived_income(i, state.labor[i], state, policy)) for i in range(state.n_agents)]
    )
    direct = policy.redistributed * float(np.sum(state.wages * state.labor))
    scale = max(1.0, float(np.sum(np.abs(state.wages * state.labor))))
    if abs(perceived.sum() - direct) > tol * scale:
        raise ConsistencyError(
            f"perceived incomes sum to {perceived.sum()!r} but aggregate is {direct!r}"
        )
    return IncomeState(perceived, direct)
