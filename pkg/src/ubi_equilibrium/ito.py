"""Closed-form Ito coefficients of labor, leisure, wage income and aggregate
income, plus the market price of risk and interest rate they imply.

With ``L = psi^{-1}(alpha * lam * w)`` and ``dw = mu_w dt + sigma_w dB`` every
coefficient is an explicit function of ``psi(L), psi'(L), psi''(L)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .labor import invert_psi, psi
from .model import AgentPreferences, EconomyModel, UbiPolicy, effective_lambda

DEADBAND = 1e-10


def _psi_terms(alpha, beta, gamma, lam, w):
    L = invert_psi(alpha * lam * w, beta, gamma)
    p, d1, d2 = psi(L, beta, gamma)
    return L, p, d1, d2


def labor_drift_vol(alpha, beta, gamma, lam, w, mu_w, sigma_w):
    L, p, d1, d2 = _psi_terms(alpha, beta, gamma, lam, w)
    al = alpha * lam
    mu = al * mu_w / d1 - 0.5 * al**2 * sigma_w**2 * d2 / d1**3
    sig = al * sigma_w / d1
    return mu, sig


def leisure_drift_vol(alpha, beta, gamma, lam, w, mu_w, sigma_w):
    L, p, d1, d2 = _psi_terms(alpha, beta, gamma, lam, w)
    s2 = sigma_w**2
    mu = (
        lam * mu_w * p / d1
        - 0.5 * alpha * lam**2 * s2 * d2 * p / d1**3
        + alpha * lam**2 * s2 / (2.0 * d1)
    )
    sig = lam * sigma_w * p / d1
    return mu, sig


def wage_labor_drift_vol(alpha, beta, gamma, lam, w, mu_w, sigma_w):
    L, p, d1, d2 = _psi_terms(alpha, beta, gamma, lam, w)
    s2 = sigma_w**2
    mu = mu_w * L + (alpha * lam * s2 + mu_w * p) / d1 - 0.5 * alpha * lam * s2 * p * d2 / d1**3
    sig = sigma_w * L + sigma_w * p / d1
    return mu, sig


def labor_coeffs(agent: AgentPreferences, policy: UbiPolicy, w, mu_w, sigma_w, n_agents: int):
    """``(mu_L, sigma_L)`` of the optimal labor share."""
    lam = effective_lambda(policy, n_agents)
    return labor_drift_vol(agent.alpha, agent.beta, agent.gamma, lam, w, mu_w, sigma_w)


def leisure_coeffs(agent: AgentPreferences, policy: UbiPolicy, w, mu_w, sigma_w, n_agents: int):
    """``(mu, sigma)`` of the leisure log-utility ``(1/alpha) log u(L)``."""
    lam = effective_lambda(policy, n_agents)
    return leisure_drift_vol(agent.alpha, agent.beta, agent.gamma, lam, w, mu_w, sigma_w)


def wage_labor_coeffs(agent: AgentPreferences, policy: UbiPolicy, w, mu_w, sigma_w, n_agents: int):
    """``(mu, sigma)`` of labor income ``w * L``."""
    lam = effective_lambda(policy, n_agents)
    return wage_labor_drift_vol(agent.alpha, agent.beta, agent.gamma, lam, w, mu_w, sigma_w)


@dataclass(frozen=True)
class CoefficientBundle:
    """Per-agent arrays have shape ``(..., I)``; aggregates have shape ``(...)``."""

    labor: np.ndarray
    leisure: np.ndarray
    mu_L: np.ndarray
    sigma_L: np.ndarray
    mu_Lcal: np.ndarray
    sigma_Lcal: np.ndarray
    mu_wL: np.ndarray
    sigma_wL: np.ndarray
    mu_eps_i: np.ndarray
    sigma_eps_i: np.ndarray
    mu_eps: np.ndarray
    sigma_eps: np.ndarray
    mu_Lcal_sum: np.ndarray
    sigma_Lcal_sum: np.ndarray


def bundle(model: EconomyModel, policy: UbiPolicy, wages) -> CoefficientBundle:
    """All labor-market coefficients at the given wage vector(s)."""
    wages = np.asarray(wages, dtype=float)
    lam = effective_lambda(policy, model.n_agents)
    alpha, beta, gamma = model.alphas, model.betas, model.gammas
    mu_w, sig_w = model.wage_drift, model.wage_vol

    L = invert_psi(alpha * lam * wages, beta, gamma)
    p, d1, d2 = psi(L, beta, gamma)
    al = alpha * lam
    s2 = sig_w**2
    r1 = 1.0 / d1
    r3 = d2 / d1**3

    mu_L = al * mu_w * r1 - 0.5 * al**2 * s2 * r3
    sigma_L = al * sig_w * r1
    mu_Lcal = lam * mu_w * p * r1 - 0.5 * alpha * lam**2 * s2 * p * r3 + 0.5 * alpha * lam**2 * s2 * r1
    sigma_Lcal = lam * sig_w * p * r1
    mu_wL = mu_w * L + (al * s2 + mu_w * p) * r1 - 0.5 * al * s2 * p * r3
    sigma_wL = sig_w * L + sig_w * p * r1

    n = model.n_agents
    k, u = policy.lambda_keep, policy.lambda_ubi
    mu_eps_i = k * mu_wL + u / n * mu_wL.sum(axis=-1, keepdims=True)
    sigma_eps_i = k * sigma_wL + u / n * sigma_wL.sum(axis=-1, keepdims=True)
    leisure = (beta * np.log(L) + gamma * np.log1p(-L)) / alpha

    return CoefficientBundle(
        labor=L,
        leisure=leisure,
        mu_L=mu_L,
        sigma_L=sigma_L,
        mu_Lcal=mu_Lcal,
        sigma_Lcal=sigma_Lcal,
        mu_wL=mu_wL,
        sigma_wL=sigma_wL,
        mu_eps_i=mu_eps_i,
        sigma_eps_i=sigma_eps_i,
        mu_eps=policy.redistributed * mu_wL.sum(axis=-1),
        sigma_eps=policy.redistributed * sigma_wL.sum(axis=-1),
        mu_Lcal_sum=mu_Lcal.sum(axis=-1),
        sigma_Lcal_sum=sigma_Lcal.sum(axis=-1),
    )


@dataclass(frozen=True)
class MarketAnalytics:
    kappa: np.ndarray
    rate: np.ndarray


def kappa_from(model: EconomyModel, b: CoefficientBundle):
    """Market price of risk; the single implementation shared with the price builder."""
    return model.aggregate.alpha_sigma * (model.dividend.vol + b.sigma_eps - b.sigma_Lcal_sum)


def drift_core(model: EconomyModel, b: CoefficientBundle):
    """``rho_Sigma + alpha_Sigma (mu_D + mu_eps - mu_Lcal)``, the linear part of the annuity driver."""
    agg = model.aggregate
    return agg.rho_sigma + agg.alpha_sigma * (model.dividend.drift + b.mu_eps - b.mu_Lcal_sum)


def market_analytics(model: EconomyModel, policy: UbiPolicy, wages) -> MarketAnalytics:
    b = bundle(model, policy, wages)
    kappa = kappa_from(model, b)
    rate = drift_core(model, b) - 0.5 * kappa**2
    return MarketAnalytics(kappa, rate)


def classify_monotonicity(values, deadband: float = DEADBAND) -> str:
    """One of ``increasing``, ``decreasing``, ``constant`` or ``nonmonotone``.

    Successive differences within ``deadband`` of zero are ignored.
    """
    d = np.diff(np.asarray(values, dtype=float))
    up = np.any(d > deadband)
    down = np.any(d < -deadband)
    if up and down:
        return "nonmonotone"
    if up:
        return "increasing"
    if down:
        return "decreasing"
    return "constant"


@dataclass(frozen=True)
class SweepRow:
    w: float
    delta: float
    kappa: float
    r: float


def sweep_market(model: EconomyModel, policy: UbiPolicy, w_grid, delta_list) -> list[SweepRow]:
    """Market price of risk and interest rate at ``t = 0`` over a shared initial wage grid.

    Every agent starts at the same wage ``w``; one block of rows per ``delta``
    in the order given.
    """
    w_grid = np.asarray(w_grid, dtype=float)
    wages = np.repeat(w_grid[:, None], model.n_agents, axis=1)
    rows = []
    for delta in delta_list:
        m = market_analytics(model, replace(policy, delta=float(delta)), wages)
        rows.extend(
            SweepRow(float(w), float(delta), float(k), float(r))
            for w, k, r in zip(w_grid, m.kappa, m.rate)
        )
    return rows


def sweep_classification(rows: list[SweepRow]) -> dict[float, dict[str, str]]:
    """Monotonicity of ``kappa(w)`` and ``r(w)`` for each delta block of a sweep."""
    out: dict[float, dict[str, str]] = {}
    for delta in dict.fromkeys(r.delta for r in rows):
        block = sorted((r for r in rows if r.delta == delta), key=lambda r: r.w)
        out[delta] = {
            "kappa": classify_monotonicity([r.kappa for r in block]),
            "r": classify_monotonicity([r.r for r in block]),
        }
    return out
