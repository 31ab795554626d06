"""Domain types for the economy: agents, UBI policy, diffusions, and aggregates.

All types are frozen dataclasses.  Construction does not validate; call
:func:`validate_economy` (and :func:`validate_policy`) to check invariants,
which reports every violation in a single :class:`ValidationError`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    InvalidDiffusion,
    InvalidPolicy,
    InvalidPreferences,
    LengthMismatch,
    ShareImbalance,
    ValidationError,
)

SHARE_TOL = 1e-12


@dataclass(frozen=True)
class AgentPreferences:
    """Risk aversion ``alpha``, time preference ``rho`` and leisure exponents.

    The labor/leisure factor is ``u(l) = l**beta * (1 - l)**gamma`` on (0, 1).
    """

    alpha: float
    rho: float
    beta: float
    gamma: float

    def u(self, l):
        l = np.asarray(l, dtype=float)
        return l**self.beta * (1.0 - l) ** self.gamma


@dataclass(frozen=True)
class UbiPolicy:
    lambda_keep: float
    lambda_ubi: float
    delta: float = 0.0

    @property
    def redistributed(self) -> float:
        """Share of aggregate labor income that returns to agents."""
        return self.lambda_keep + self.lambda_ubi

    def effective_lambda(self, n_agents: int) -> float:
        return effective_lambda(self, n_agents)


@dataclass(frozen=True)
class DiffusionSpec:
    """Arithmetic Brownian motion ``initial + drift * t + vol * B_t``."""

    initial: float
    drift: float = 0.0
    vol: float = 0.0

    def value(self, t, x):
        return self.initial + self.drift * np.asarray(t) + self.vol * np.asarray(x)

    @property
    def is_constant(self) -> bool:
        return self.drift == 0.0 and self.vol == 0.0


@dataclass(frozen=True)
class AggregatePreferences:
    alpha_sigma: float
    rho_sigma: float


@dataclass(frozen=True)
class EconomyModel:
    agents: tuple[AgentPreferences, ...]
    wages: tuple[DiffusionSpec, ...]
    dividend: DiffusionSpec
    horizon: float
    initial_stock_shares: tuple[float, ...]
    initial_annuity_shares: tuple[float, ...]
    _aggregate: AggregatePreferences | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        # normalise list inputs so the model stays hashable and immutable
        for name in ("agents", "wages", "initial_stock_shares", "initial_annuity_shares"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def aggregate(self) -> AggregatePreferences:
        if self._aggregate is None:
            object.__setattr__(self, "_aggregate", aggregate_preferences(self.agents))
        return self._aggregate

    @property
    def constant_wages(self) -> bool:
        return all(w.is_constant for w in self.wages)

    # vectorised parameter views, shape (I,)
    @property
    def alphas(self) -> np.ndarray:
        return np.array([a.alpha for a in self.agents])

    @property
    def rhos(self) -> np.ndarray:
        return np.array([a.rho for a in self.agents])

    @property
    def betas(self) -> np.ndarray:
        return np.array([a.beta for a in self.agents])

    @property
    def gammas(self) -> np.ndarray:
        return np.array([a.gamma for a in self.agents])

    @property
    def wage_initial(self) -> np.ndarray:
        return np.array([w.initial for w in self.wages])

    @property
    def wage_drift(self) -> np.ndarray:
        return np.array([w.drift for w in self.wages])

    @property
    def wage_vol(self) -> np.ndarray:
        return np.array([w.vol for w in self.wages])

    def wages_at(self, t, x) -> np.ndarray:
        """Wage rates at time ``t`` and Brownian level ``x``; shape ``x.shape + (I,)``."""
        t = np.asarray(t, dtype=float)[..., None]
        x = np.asarray(x, dtype=float)[..., None]
        return self.wage_initial + self.wage_drift * t + self.wage_vol * x

    def dividend_at(self, t, x) -> np.ndarray:
        return self.dividend.value(t, x)

    def with_initial_wages(self, w) -> "EconomyModel":
        """Copy of the model with every initial wage replaced by ``w``."""
        w = np.broadcast_to(np.asarray(w, dtype=float), (self.n_agents,))
        wages = tuple(
            DiffusionSpec(float(wi), spec.drift, spec.vol) for wi, spec in zip(w, self.wages)
        )
        return EconomyModel(
            self.agents,
            wages,
            self.dividend,
            self.horizon,
            self.initial_stock_shares,
            self.initial_annuity_shares,
        )


def effective_lambda(policy: UbiPolicy, n_agents: int) -> float:
    """Labor incentive ``lambda_keep + (lambda_ubi / I) * (1 + delta * (I - 1))``."""
    if n_agents < 1:
        raise ValueError("agent count must be at least 1")
    return policy.lambda_keep + policy.lambda_ubi / n_agents * (
        1.0 + policy.delta * (n_agents - 1)
    )


def aggregate_preferences(agents: Sequence[AgentPreferences]) -> AggregatePreferences:
    inv = sum(1.0 / a.alpha for a in agents)
    alpha_sigma = 1.0 / inv
    rho_sigma = alpha_sigma * sum(a.rho / a.alpha for a in agents)
    return AggregatePreferences(alpha_sigma, rho_sigma)


def _finite(v) -> bool:
    try:
        return math.isfinite(float(v))
    except (TypeError, ValueError):
        return False


def policy_violations(policy: UbiPolicy) -> list:
    out = []
    k, u = policy.lambda_keep, policy.lambda_ubi
    if not (_finite(k) and _finite(u) and _finite(policy.delta)):
        return [InvalidPolicy(f"non-finite policy parameters {policy}")]
    if not 0.0 <= k <= 1.0:
        out.append(InvalidPolicy(f"lambda_keep={k} outside [0, 1]"))
    if u < 0.0:
        out.append(InvalidPolicy(f"lambda_ubi={u} is negative"))
    if k + u > 1.0 + SHARE_TOL:
        out.append(InvalidPolicy(f"lambda_keep + lambda_ubi = {k + u} exceeds 1"))
    return out


def validate_policy(policy: UbiPolicy) -> UbiPolicy:
    problems = policy_violations(policy)
    if problems:
        raise ValidationError(problems)
    return policy


def validate_economy(model: EconomyModel, policy: UbiPolicy | None = None) -> EconomyModel:
    """Check every model invariant and return the model unchanged.

    All violations are collected and raised together as a
    :class:`ValidationError` whose ``violations`` list holds
    :class:`InvalidPolicy`, :class:`InvalidPreferences`,
    :class:`ShareImbalance` and :class:`LengthMismatch` instances.
    """
    problems: list = []
    n = len(model.agents)
    if n < 1:
        problems.append(LengthMismatch("economy needs at least one agent"))
    for i, a in enumerate(model.agents):
        vals = (a.alpha, a.rho, a.beta, a.gamma)
        if not all(_finite(v) for v in vals):
            problems.append(InvalidPreferences(f"agent {i}: non-finite parameters"))
            continue
        if a.alpha <= 0:
            problems.append(InvalidPreferences(f"agent {i}: alpha={a.alpha} must be > 0"))
        if a.rho < 0:
            problems.append(InvalidPreferences(f"agent {i}: rho={a.rho} must be >= 0"))
        if a.beta >= 0:
            problems.append(InvalidPreferences(f"agent {i}: beta={a.beta} must be < 0"))
        if a.gamma >= 0:
            problems.append(InvalidPreferences(f"agent {i}: gamma={a.gamma} must be < 0"))
    for name in ("wages", "initial_stock_shares", "initial_annuity_shares"):
        m = len(getattr(model, name))
        if m != n:
            problems.append(LengthMismatch(f"{name} has length {m}, expected {n}"))
    specs = list(model.wages) + [model.dividend]
    for s in specs:
        if not all(_finite(v) for v in (s.initial, s.drift, s.vol)):
            problems.append(InvalidDiffusion(f"non-finite diffusion coefficients in {s}"))
    if not (_finite(model.horizon) and model.horizon > 0):
        problems.append(InvalidDiffusion(f"horizon={model.horizon} must be positive"))
    for name in ("initial_stock_shares", "initial_annuity_shares"):
        shares = getattr(model, name)
        if shares and abs(sum(shares) - 1.0) > 1e-9:
            problems.append(ShareImbalance(f"{name} sum to {sum(shares)}, expected 1"))
    if policy is not None:
        problems.extend(policy_violations(policy))
    if problems:
        raise ValidationError(problems)
    return model


def nonpositive_wage_mask(wages) -> np.ndarray:
    """True where any agent's wage is <= 0 (conclusions needing w > 0 must skip these)."""
    return np.any(np.asarray(wages) <= 0.0, axis=-1)
