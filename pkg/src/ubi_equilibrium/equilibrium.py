"""Prices, strategies and wealth built from a backward solution, forward
simulation of equilibrium paths, clearing checks and the optimality
martingale test.

Everything is driven by one Brownian motion ``B``; wages and the dividend are
arithmetic in ``B``, so the Brownian level ``x = B_t`` is the complete state.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .bsde import BackwardSolution
from .errors import InsufficientPaths, OutOfGrid, SeedRequired, StepSizeError
from .ito import CoefficientBundle, bundle, drift_core, kappa_from
from .labor import IncomeState, LaborState, realized_incomes
from .model import EconomyModel, UbiPolicy, effective_lambda

#: relative threshold below which ``sigma_S`` counts as zero
SIGMA_S_ZERO = 1e-12
#: paths per independently seeded chunk; fixed so results do not depend on the worker count
CHUNK_PATHS = 2048
THREADS_ENV = "UBI_EQ_THREADS"

CLEARING_ROWS = ("stock", "annuity", "goods", "wealth", "income")


def default_workers() -> int:
    """Worker threads for path simulation, from ``$UBI_EQ_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class PriceState:
    """Annuity and stock prices with their dynamics coefficients; arrays broadcast over states."""

    annuity: np.ndarray
    stock: np.ndarray
    mu_A: np.ndarray
    sigma_A: np.ndarray
    mu_S: np.ndarray
    sigma_S: np.ndarray
    kappa: np.ndarray

    @property
    def rate(self) -> np.ndarray:
        """Interest rate ``mu_A - kappa * sigma_A``."""
        return self.mu_A - self.kappa * self.sigma_A


@dataclass(frozen=True)
class AgentState:
    """Per-agent holdings; every field has a trailing agent axis."""

    stock_shares: np.ndarray
    annuity_shares: np.ndarray
    consumption: np.ndarray
    wealth: np.ndarray


@dataclass(frozen=True)
class MarketState:
    """Everything the equilibrium formulas need at a batch of ``(t, x)`` points."""

    time: float
    x: np.ndarray
    wages: np.ndarray
    dividend: np.ndarray
    coeffs: CoefficientBundle
    a: np.ndarray
    z_a: np.ndarray
    ybar: np.ndarray
    zbar: np.ndarray
    y: np.ndarray  # Y_i = Ybar_i + eps_i - Lcal_i
    z: np.ndarray  # Z_i = Zbar_i + sigma_eps_i - sigma_Lcal_i
    incomes: np.ndarray
    prices: PriceState
    in_domain: np.ndarray


def market_state(t, x, solution: BackwardSolution, model: EconomyModel, policy: UbiPolicy, strict=True) -> MarketState:
    """Fields, coefficients and prices at time ``t`` and Brownian levels ``x``.

    With ``strict`` a point outside the solution's state domain raises
    :class:`OutOfGrid`; otherwise it is clamped and reported in ``in_domain``.
    """
    t = float(t)
    x = np.asarray(x, dtype=float)
    inside = solution.in_domain(x)
    if strict and not np.all(inside):
        raise OutOfGrid(f"x outside the solution domain at t={t}")
    if t < -1e-12 or t > solution.horizon * (1 + 1e-12):
        raise OutOfGrid(f"t={t} outside [0, {solution.horizon}]")
    a, z_a, ybar, zbar = solution.at(t, x)
    wages = model.wages_at(t, x)
    b = bundle(model, policy, wages)
    agg = model.aggregate
    kappa = kappa_from(model, b)
    incomes = realized_incomes(wages, b.labor, policy)
    y = ybar + incomes - b.leisure
    z = zbar + b.sigma_eps_i - b.sigma_Lcal

    A = np.exp(a)
    D = model.dividend_at(t, x)
    # D + eps_S - a/alpha_S - Y_S - Lcal_S collapses to D - a/alpha_S - sum Ybar
    S = A * (D - a / agg.alpha_sigma - ybar.sum(axis=-1))
    mu_A = drift_core(model, b) - 0.5 * kappa**2 + kappa * z_a
    sigma_S = A / agg.alpha_sigma * (kappa - z_a - agg.alpha_sigma * z.sum(axis=-1))
    prices = PriceState(
        annuity=A, stock=S, mu_A=mu_A, sigma_A=np.asarray(z_a, dtype=float),
        mu_S=kappa * sigma_S, sigma_S=sigma_S, kappa=kappa,
    )
    return MarketState(t, x, wages, D, b, a, z_a, ybar, zbar, y, z, incomes, prices, inside)


def build_prices(t, x, solution: BackwardSolution, model: EconomyModel, policy: UbiPolicy) -> PriceState:
    """Annuity ``A = exp(a)``, stock ``S`` and their coefficients at ``(t, x)``."""
    return market_state(t, x, solution, model, policy).prices


def endowment_wealth(model: EconomyModel, prices: PriceState) -> np.ndarray:
    """Wealth of the initial holdings ``theta_{i,0-} A + pi_{i,0-} S`` at the given prices."""
    theta0 = np.asarray(model.initial_annuity_shares, dtype=float)
    pi0 = np.asarray(model.initial_stock_shares, dtype=float)
    return theta0 * prices.annuity[..., None] + pi0 * prices.stock[..., None]


def stock_allocation(state: MarketState, model: EconomyModel) -> np.ndarray:
    """Optimal stock shares; held at the endowment where ``|sigma_S| < 1e-12 A``."""
    p = state.prices
    alphas = model.alphas
    sig = p.sigma_S[..., None]
    flat = np.abs(sig) < SIGMA_S_ZERO * p.annuity[..., None]
    safe = np.where(flat, 1.0, sig)
    pi = p.annuity[..., None] / (alphas * safe) * ((p.kappa - p.sigma_A)[..., None] - alphas * state.z)
    pi0 = np.asarray(model.initial_stock_shares, dtype=float)
    return np.where(flat, pi0, pi)


def _strategies(state: MarketState, model: EconomyModel, wealth) -> AgentState:
    p = state.prices
    A = p.annuity[..., None]
    pi = stock_allocation(state, model)
    c = wealth / A + state.a[..., None] / model.alphas + state.y + state.coeffs.leisure
    theta = (wealth - pi * p.stock[..., None]) / A
    return AgentState(pi, theta, c, wealth)


def strategies(t, x, solution: BackwardSolution, model: EconomyModel, policy: UbiPolicy, wealth=None) -> list[AgentState]:
    """Optimal ``(pi_i, theta_i, c_i, X_i)`` per agent at a single state.

    ``wealth`` defaults to the endowment valued at the current prices, which
    satisfies ``sum X_i = S + A`` exactly.
    """
    state = market_state(t, np.asarray(x, dtype=float), solution, model, policy)
    if wealth is None:
        wealth = endowment_wealth(model, state.prices)
    st = _strategies(state, model, np.asarray(wealth, dtype=float))
    return [
        AgentState(
            float(np.asarray(st.stock_shares)[..., i]),
            float(np.asarray(st.annuity_shares)[..., i]),
            float(np.asarray(st.consumption)[..., i]),
            float(np.asarray(st.wealth)[..., i]),
        )
        for i in range(model.n_agents)
    ]


def clearing_residuals(
    prices: PriceState,
    agents: AgentState,
    dividend,
    incomes,
    wages,
    labor,
    policy: UbiPolicy,
) -> np.ndarray:
    """The five clearing residuals, stacked on a trailing axis of length 5.

    Order: stock ``|sum pi - 1|``, annuity ``|sum theta - 1|``, goods
    ``|sum c - (1 + D + eps_S)|``, wealth ``|sum X - (S + A)|`` and income
    ``|sum eps_i(L_i) - (lambda_keep + lambda_ubi) sum w_i L_i|``.
    """
    eps_sum = np.sum(incomes, axis=-1)
    direct = policy.redistributed * np.sum(np.asarray(wages) * np.asarray(labor), axis=-1)
    return np.stack(
        [
            np.abs(agents.stock_shares.sum(axis=-1) - 1.0),
            np.abs(agents.annuity_shares.sum(axis=-1) - 1.0),
            np.abs(agents.consumption.sum(axis=-1) - (1.0 + dividend + eps_sum)),
            np.abs(agents.wealth.sum(axis=-1) - (prices.stock + prices.annuity)),
            np.abs(eps_sum - direct),
        ],
        axis=-1,
    )


def analytic_clearing(t, x, solution: BackwardSolution, model: EconomyModel, policy: UbiPolicy) -> np.ndarray:
    """Clearing residuals at states with endowment-valued wealth (no time stepping)."""
    state = market_state(t, x, solution, model, policy)
    st = _strategies(state, model, endowment_wealth(model, state.prices))
    return clearing_residuals(
        state.prices, st, state.dividend, state.incomes, state.wages, state.coeffs.labor, policy
    )


@dataclass(frozen=True)
class Deviation:
    """A suboptimal strategy for one agent, run as a shadow alongside the equilibrium.

    The deviation consumes ``c_i(X) + consumption_shift`` under its own
    wealth, works ``labor_scale * L_i`` and holds ``pi_i + stock_shift``
    shares.  Prices are unaffected (agents are price takers).
    """

    agent: int
    consumption_shift: float = 0.0
    labor_scale: float = 1.0
    stock_shift: float = 0.0

    @property
    def label(self) -> str:
        parts = []
        if self.consumption_shift:
            parts.append(f"c{self.consumption_shift:+g}")
        if self.labor_scale != 1.0:
            parts.append(f"Lx{self.labor_scale:g}")
        if self.stock_shift:
            parts.append(f"pi{self.stock_shift:+g}")
        return f"agent{self.agent + 1}:" + (",".join(parts) or "optimal")


@dataclass
class EquilibriumPath:
    """One simulated path; array fields have the time axis first."""

    time: np.ndarray
    brownian: np.ndarray
    wages: np.ndarray
    dividend: np.ndarray
    labor: np.ndarray
    leisure: np.ndarray
    incomes: np.ndarray
    prices: PriceState
    agents: AgentState
    objective: np.ndarray
    policy: UbiPolicy
    in_domain: bool = True

    @property
    def aggregate_income(self) -> np.ndarray:
        return self.incomes.sum(axis=-1)

    @property
    def residuals(self) -> np.ndarray:
        """Clearing residuals per step, shape ``(n_steps + 1, 5)``."""
        return clearing_residuals(
            self.prices, self.agents, self.dividend, self.incomes, self.wages, self.labor, self.policy
        )

    def labor_state(self, k: int) -> LaborState:
        return LaborState(float(self.time[k]), self.wages[k], self.labor[k], self.leisure[k], self.policy)

    def income_state(self, k: int) -> IncomeState:
        return IncomeState(self.incomes[k], float(self.incomes[k].sum()))


@dataclass
class EquilibriumEnsemble:
    """Simulated paths.

    ``objective`` holds ``V_i(t)`` for every path, step and agent, and
    ``deviant_objective`` the shadow ``V`` of each :class:`Deviation`
    (shape ``(paths, steps + 1, n_deviations)``).  Per-path state series are
    kept only when simulated with ``store_paths=True``.
    """

    time: np.ndarray
    v0: np.ndarray
    objective: np.ndarray
    deviant_objective: np.ndarray
    deviations: tuple[Deviation, ...]
    valid: np.ndarray
    residual_max_by_step: np.ndarray
    residual_max_by_path: np.ndarray
    terminal_annuity: np.ndarray
    terminal_stock_gap: np.ndarray
    policy: UbiPolicy
    paths: list[EquilibriumPath] | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return len(self.valid)

    @property
    def excluded(self) -> int:
        """Paths flagged for leaving the solution domain."""
        return int(np.count_nonzero(~self.valid))

    def path(self, j: int) -> EquilibriumPath:
        if self.paths is None:
            raise ValueError("paths were not stored; simulate with store_paths=True")
        return self.paths[j]

    def residual_summary(self) -> dict[str, float]:
        """Largest residual of each clearing row over valid paths and all steps."""
        m = self.residual_max_by_path[self.valid]
        if m.size == 0:
            return {k: float("nan") for k in CLEARING_ROWS}
        return dict(zip(CLEARING_ROWS, (float(v) for v in m.max(axis=0))))


def _simulate_chunk(model, policy, solution, dB, dt, deviations, store):
    m, n_steps = dB.shape
    n = model.n_agents
    alphas, rhos = model.alphas, model.rhos
    t_grid = dt * np.arange(n_steps + 1)
    x = np.zeros(m)
    valid = np.ones(m, dtype=bool)
    n_dev = len(deviations)
    lam = effective_lambda(policy, n)

    V = np.empty((m, n_steps + 1, n))
    Vd = np.empty((m, n_steps + 1, n_dev))
    res_step = np.empty((n_steps + 1, 5))
    res_path = np.zeros((m, 5))
    series: dict[str, list] = {k: [] for k in ("x", "w", "D", "L", "Lc", "eps", "P", "pi", "th", "c", "X")}

    g = d_g = None
    run = np.zeros((m, n))
    run_d = np.zeros((m, n_dev))
    prev_int = prev_int_d = None
    dev_idx = np.array([d.agent for d in deviations], dtype=int)
    c_shift = np.array([d.consumption_shift for d in deviations])
    l_scale = np.array([d.labor_scale for d in deviations])
    p_shift = np.array([d.stock_shift for d in deviations])

    for k in range(n_steps + 1):
        t = t_grid[k]
        st = market_state(t, x, solution, model, policy, strict=False)
        valid &= st.in_domain
        p = st.prices
        A = p.annuity
        if g is None:
            g = endowment_wealth(model, p) / A[:, None]
            d_g = g[:, dev_idx].copy()
        X = g * A[:, None]
        ag = _strategies(st, model, X)
        u = np.exp(alphas * st.coeffs.leisure)
        integrand = np.exp(-rhos * t - alphas * ag.consumption) * u

        # shadow strategies of the deviating agents
        a_dev = alphas[dev_idx]
        L_dev = np.clip(st.coeffs.labor[:, dev_idx] * l_scale, 1e-300, 1.0 - 1e-16)
        # perceived income is affine in the agent's own labor: eps_i(l) = eps_i(L_i) + lam w_i (l - L_i)
        w_dev = st.wages[:, dev_idx]
        eps_dev = st.incomes[:, dev_idx] + lam * w_dev * (L_dev - st.coeffs.labor[:, dev_idx])
        lc_dev = (model.betas[dev_idx] * np.log(L_dev) + model.gammas[dev_idx] * np.log1p(-L_dev)) / a_dev
        c_dev = d_g + st.a[:, None] / a_dev + st.y[:, dev_idx] + st.coeffs.leisure[:, dev_idx] + c_shift
        pi_dev = ag.stock_shares[:, dev_idx] + p_shift
        int_dev = np.exp(-rhos[dev_idx] * t - a_dev * c_dev + a_dev * lc_dev)

        if k > 0:
            run += 0.5 * dt * (prev_int + integrand)
            run_d += 0.5 * dt * (prev_int_d + int_dev)
        V[:, k] = -run - np.exp(-rhos * t - alphas * (g + st.y))
        Vd[:, k] = -run_d - np.exp(-rhos[dev_idx] * t - a_dev * (d_g + st.y[:, dev_idx]))

        res = clearing_residuals(p, ag, st.dividend, st.incomes, st.wages, st.coeffs.labor, policy)
        res_step[k] = np.where(valid[:, None], res, 0.0).max(axis=0) if m else 0.0
        res_path = np.maximum(res_path, res)
        if store:
            for key, val in zip(
                series,
                (x.copy(), st.wages, st.dividend, st.coeffs.labor, st.coeffs.leisure, st.incomes, p,
                 ag.stock_shares, ag.annuity_shares, ag.consumption, ag.wealth),
            ):
                series[key].append(val)

        if k == n_steps:
            break
        excess = (p.mu_S - p.sigma_A * p.sigma_S) / A
        vol = p.sigma_S / A
        # on-equilibrium this drift reduces to -(a + alpha_i Ybar_i) / (alpha_i A)
        drift = ag.stock_shares * excess[:, None] + (g + st.incomes - ag.consumption) / A[:, None]
        d_drift = pi_dev * excess[:, None] + (d_g + eps_dev - c_dev) / A[:, None]
        db = dB[:, k]
        g = g + drift * dt + ag.stock_shares * (vol * db)[:, None]
        d_g = d_g + d_drift * dt + pi_dev * (vol * db)[:, None]
        prev_int, prev_int_d = integrand, int_dev
        x = x + db

    paths = None
    if store:
        paths = []
        for j in range(m):
            pj = PriceState(*(np.array([getattr(s, f)[j] for s in series["P"]]) for f in (
                "annuity", "stock", "mu_A", "sigma_A", "mu_S", "sigma_S", "kappa")))
            paths.append(
                EquilibriumPath(
                    time=t_grid.copy(),
                    brownian=np.array([s[j] for s in series["x"]]),
                    wages=np.array([s[j] for s in series["w"]]),
                    dividend=np.array([s[j] for s in series["D"]]),
                    labor=np.array([s[j] for s in series["L"]]),
                    leisure=np.array([s[j] for s in series["Lc"]]),
                    incomes=np.array([s[j] for s in series["eps"]]),
                    prices=pj,
                    agents=AgentState(*(np.array([s[j] for s in series[f]]) for f in ("pi", "th", "c", "X"))),
                    objective=V[j],
                    policy=policy,
                    in_domain=bool(valid[j]),
                )
            )
    terminal_gap = np.abs(p.stock - st.dividend)
    return dict(
        V=V, Vd=Vd, valid=valid, res_step=res_step, res_path=res_path,
        A_T=p.annuity.copy(), S_gap=terminal_gap, paths=paths,
    )


def simulate(
    model: EconomyModel,
    policy: UbiPolicy,
    solution: BackwardSolution,
    n_paths: int,
    n_steps: int,
    seed: int | None,
    deviations: Sequence[Deviation] = (),
    store_paths: bool = False,
    increments: np.ndarray | None = None,
    workers: int | None = None,
) -> EquilibriumEnsemble:
    """Euler-Maruyama forward pass of the equilibrium on ``[0, T]``.

    Wealth is carried as ``X_i / A`` with the self-financing increment
    ``[pi (mu_S - sigma_A sigma_S) + X/A + eps_i(L) - c] / A dt + pi sigma_S / A dB``,
    which is the closed-form optimal wealth integrand when ``c = c_i``.
    The objective integral uses the trapezoid rule.

    Paths are drawn in fixed-size chunks, one spawned seed per chunk, so the
    output is identical for any ``workers``.  ``increments`` (shape
    ``(n_paths, n_steps)``) replaces the random draws, e.g. to refine one
    Brownian path.  Paths leaving the solution domain are flagged in
    ``valid``, never silently kept.
    """
    if increments is None and seed is None:
        raise SeedRequired("simulate needs an explicit seed")
    if n_steps < 1:
        raise StepSizeError("simulate needs at least one time step")
    if n_paths < 1:
        raise ValueError("simulate needs at least one path")
    for d in deviations:
        if not 0 <= d.agent < model.n_agents:
            raise IndexError(f"deviation agent {d.agent} out of range")
    T = model.horizon
    dt = T / n_steps
    n_chunks = -(-n_paths // CHUNK_PATHS)
    streams = np.random.SeedSequence(seed).spawn(n_chunks) if increments is None else [None] * n_chunks
    if increments is not None:
        increments = np.asarray(increments, dtype=float)
        if increments.shape != (n_paths, n_steps):
            raise ValueError(f"increments must have shape {(n_paths, n_steps)}")

    def job(c):
        lo, hi = c * CHUNK_PATHS, min(n_paths, (c + 1) * CHUNK_PATHS)
        if increments is None:
            dB = np.random.default_rng(streams[c]).standard_normal((hi - lo, n_steps)) * np.sqrt(dt)
        else:
            dB = increments[lo:hi]
        return _simulate_chunk(model, policy, solution, dB, dt, tuple(deviations), store_paths)

    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or n_chunks == 1:
        parts = [job(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(n_chunks)))

    cat = lambda key: np.concatenate([p[key] for p in parts], axis=0)
    a0, _, yb0, _ = solution.at(0.0, np.asarray(0.0))
    st0 = market_state(0.0, np.zeros(1), solution, model, policy)
    g0 = endowment_wealth(model, st0.prices)[0] / st0.prices.annuity[0]
    v0 = -np.exp(-model.alphas * (g0 + st0.y[0]))
    paths = None
    if store_paths:
        paths = [p for part in parts for p in part["paths"]]
    return EquilibriumEnsemble(
        time=dt * np.arange(n_steps + 1),
        v0=v0,
        objective=cat("V"),
        deviant_objective=cat("Vd"),
        deviations=tuple(deviations),
        valid=cat("valid"),
        residual_max_by_step=np.max(np.stack([p["res_step"] for p in parts]), axis=0),
        residual_max_by_path=cat("res_path"),
        terminal_annuity=cat("A_T"),
        terminal_stock_gap=cat("S_gap"),
        policy=policy,
        paths=paths,
        meta={
            "n_paths": n_paths,
            "n_steps": n_steps,
            "seed": seed,
            "chunk_paths": CHUNK_PATHS,
            "regime": solution.regime,
        },
    )


@dataclass(frozen=True)
class ClearingReport:
    residuals: dict[str, float]
    tol: float

    @property
    def flagged(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not v <= self.tol]

    @property
    def passed(self) -> bool:
        return not self.flagged


def check_clearing(path: EquilibriumPath, tol: float) -> ClearingReport:
    """Maximum over steps of each clearing residual; passes iff all are within ``tol``."""
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    r = path.residuals.max(axis=0)
    return ClearingReport(dict(zip(CLEARING_ROWS, (float(v) for v in r))), tol)


MARTINGALE = "martingale-consistent"
SUPERMARTINGALE = "supermartingale-consistent"
STRICT = "strict-supermartingale"
VIOLATED = "violated"


@dataclass(frozen=True)
class MartingaleResult:
    """``gap`` estimates ``E[V_T] - V_0``; ``se`` is its standard error."""

    gap: float
    se: float
    verdict: str
    n_used: int
    excluded: int
    deviation: Deviation | None
    method: str


def martingale_test(
    ensemble: EquilibriumEnsemble,
    agent: int,
    deviation: int | None = None,
    paired: bool = True,
) -> MartingaleResult:
    """Test the martingale (optimal) or supermartingale (deviation) property of ``V``.

    For the optimal strategy the verdict is ``martingale-consistent`` when
    ``|mean V_T - V_0| <= 3 SE``.  For ``deviation`` (an index into
    ``ensemble.deviations``) it is ``strict-supermartingale`` when
    ``mean V_T + 3 SE < V_0``, ``supermartingale-consistent`` when
    ``mean V_T <= V_0 + 3 SE`` and ``violated`` otherwise.

    With ``paired`` the deviation gap is the mean of ``V_T^dev - V_T^opt``
    over common paths, which estimates the same quantity because the
    optimal ``V`` is a martingale started at the same ``V_0``.
    """
    mask = ensemble.valid
    n_used = int(np.count_nonzero(mask))
    if n_used < 2:
        raise InsufficientPaths(f"need at least 2 valid paths, have {n_used}")
    v0 = float(ensemble.v0[agent])
    opt = ensemble.objective[mask, -1, agent]
    if deviation is None:
        gap = float(opt.mean() - v0)
        se = float(opt.std(ddof=1) / np.sqrt(n_used))
        verdict = MARTINGALE if abs(gap) <= 3.0 * se else VIOLATED
        return MartingaleResult(gap, se, verdict, n_used, ensemble.excluded, None, "direct")
    dev = ensemble.deviations[deviation]
    if dev.agent != agent:
        raise ValueError(f"deviation {deviation} belongs to agent {dev.agent}, not {agent}")
    vd = ensemble.deviant_objective[mask, -1, deviation]
    sample = vd - opt if paired else vd - v0
    gap = float(sample.mean())
    se = float(sample.std(ddof=1) / np.sqrt(n_used))
    if gap + 3.0 * se < 0.0:
        verdict = STRICT
    elif gap <= 3.0 * se:
        verdict = SUPERMARTINGALE
    else:
        verdict = VIOLATED
    return MartingaleResult(gap, se, verdict, n_used, ensemble.excluded, dev, "paired" if paired else "direct")


def with_perturbed_stock(path: EquilibriumPath, agent: int, shift: float) -> EquilibriumPath:
    """Copy of ``path`` with agent ``agent``'s recorded stock shares shifted (fault injection)."""
    pi = path.agents.stock_shares.copy()
    pi[:, agent] += shift
    return replace(path, agents=replace(path.agents, stock_shares=pi))
