"""Backward solvers for the characterizing system in shifted variables.

The unknowns are the log annuity price ``a`` and ``Ybar_i = Y_i - eps_i(L_i) + Lcal_i``
(both vanish at the horizon).  Both are written with forward drifts,
``da = Z_a dB + f_a dt``, so in the Markov one-factor setting
``a = a(t, B_t)`` solves ``a_t + a_xx / 2 = f_a(t, x, a, a_x)`` with ``a(T, .) = 0``.

Three routes are provided:

* :func:`solve_ode` -- constant wages, where the ``Z`` terms vanish; classical RK4.
* :func:`solve_pde` -- Crank-Nicolson in time with Picard iteration on the drivers.
* :func:`mc_crosscheck` -- least-squares regression Monte Carlo, as an independent check.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.linalg import solve_banded

from .errors import GridError, NoConvergence, RegimeError, SeedRequired, StepSizeError
from .ito import bundle, drift_core, kappa_from
from .model import EconomyModel, UbiPolicy

log = logging.getLogger(__name__)

ODE, PDE, MC = "ODE", "PDE", "MC"
PICARD_TOL = 1e-10
PICARD_MAX_ITER = 200


@dataclass(frozen=True)
class DriverTerms:
    """State-dependent coefficients that enter the drivers, on some ``(t, x)`` array."""

    kappa: np.ndarray  # (...)
    core: np.ndarray  # rho_S + alpha_S (mu_D + mu_eps - mu_Lcal), (...)
    m: np.ndarray  # mu_Lcal_i - mu_eps_i, (..., I)
    s: np.ndarray  # sigma_eps_i - sigma_Lcal_i, (..., I)


def driver_terms(model: EconomyModel, policy: UbiPolicy, t, x) -> DriverTerms:
    b = bundle(model, policy, model.wages_at(t, x))
    return DriverTerms(
        kappa=kappa_from(model, b),
        core=drift_core(model, b),
        m=b.mu_Lcal - b.mu_eps_i,
        s=b.sigma_eps_i - b.sigma_Lcal,
    )


def _f_a(terms: DriverTerms, a, z_a, floor=None):
    ea = np.exp(-a if floor is None else -np.maximum(a, floor))
    return terms.core - 0.5 * (terms.kappa - z_a) ** 2 - ea


def driver_a(t, x, a, z_a, model: EconomyModel, policy: UbiPolicy, floor=None):
    """Drift of the log annuity price.

    ``rho_S + alpha_S (mu_D + mu_eps - mu_Lcal) - (kappa - Z_a)**2 / 2 - exp(-a)``;
    ``floor`` applies the truncation guard ``exp(-max(a, floor))``.
    """
    return _f_a(driver_terms(model, policy, t, x), np.asarray(a, float), np.asarray(z_a, float), floor)


def driver_ybar(i, t, x, ybar, zbar, a, z_a, model: EconomyModel, policy: UbiPolicy):
    """Drift of ``Ybar_i`` given the annuity solution ``(a, Z_a)``."""
    terms = driver_terms(model, policy, t, x)
    ag = model.agents[i]
    gap = terms.kappa - z_a
    a = np.asarray(a, float)
    return (1.0 / ag.alpha) * (
        -ag.rho
        + ag.alpha * terms.m[..., i]
        + (1.0 + a + ag.alpha * np.asarray(ybar, float)) * np.exp(-a)
        - 0.5 * gap**2
        + ag.alpha * (np.asarray(zbar, float) + terms.s[..., i]) * gap
    )


def driver_ysum(t, x, ysum, zsum, a, z_a, eps_sum, lcal_sum, model: EconomyModel, policy: UbiPolicy):
    """Drift of ``Y_Sigma = sum_i Y_i`` in unshifted variables (``A = exp(a)``)."""
    terms = driver_terms(model, policy, t, x)
    agg = model.aggregate
    gap = terms.kappa - z_a
    return (1.0 / agg.alpha_sigma) * (
        -agg.rho_sigma
        + (1.0 + a + agg.alpha_sigma * (ysum - eps_sum + lcal_sum)) * np.exp(-a)
        - 0.5 * gap**2
        + agg.alpha_sigma * zsum * gap
    )


def _ybar_drivers(terms: DriverTerms, alphas, rhos, ybar, zbar, a, z_a):
    """All ``Ybar_i`` drifts at once; ``ybar, zbar`` shaped ``(..., I)``."""
    gap = (terms.kappa - z_a)[..., None]
    a = np.asarray(a)[..., None]
    return (
        (-rhos + (1.0 + a + alphas * ybar) * np.exp(-a) - 0.5 * gap**2) / alphas
        + terms.m
        + (zbar + terms.s) * gap
    )


@dataclass
class BackwardSolution:
    """Solved fields on a time (and, for PDE, space) grid.

    Field shapes: ``a_field``/``za_field`` are ``(nt+1,)`` or ``(nt+1, nx)``;
    ``ybar_fields``/``zbar_fields`` add a trailing agent axis.
    """

    regime: str
    time_grid: np.ndarray
    state_grid: np.ndarray | None
    a_field: np.ndarray
    za_field: np.ndarray
    ybar_fields: np.ndarray
    zbar_fields: np.ndarray
    lower_bound: float = -np.inf
    guard_floor: float | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def horizon(self) -> float:
        return float(self.time_grid[-1])

    def in_domain(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.state_grid is None:
            return np.ones(x.shape, dtype=bool)
        return (x >= self.state_grid[0]) & (x <= self.state_grid[-1])

    def at(self, t, x):
        """Linear interpolation in ``t`` (and ``x``) of ``(a, Z_a, Ybar, Zbar)``.

        ``t`` is a scalar; ``x`` any array.  ``x`` outside the PDE domain is
        clamped to the edge -- callers flag such points with :meth:`in_domain`.
        """
        tg = self.time_grid
        t = float(t)
        k = int(np.clip(np.searchsorted(tg, t, side="right") - 1, 0, len(tg) - 2))
        wt = (t - tg[k]) / (tg[k + 1] - tg[k])
        if t >= tg[-1]:
            k, wt = len(tg) - 2, 1.0
        x = np.asarray(x, dtype=float)

        def lerp_t(f):
            if wt == 0.0:
                return f[k]
            if wt == 1.0:
                return f[k + 1]
            return (1.0 - wt) * f[k] + wt * f[k + 1]

        if self.state_grid is None:
            shape = x.shape
            a = np.broadcast_to(lerp_t(self.a_field), shape)
            za = np.broadcast_to(lerp_t(self.za_field), shape)
            yb = np.broadcast_to(lerp_t(self.ybar_fields), shape + self.ybar_fields.shape[-1:])
            zb = np.broadcast_to(lerp_t(self.zbar_fields), shape + self.zbar_fields.shape[-1:])
            return a, za, yb, zb

        xg = self.state_grid
        xc = np.clip(x, xg[0], xg[-1])
        j = np.clip(np.searchsorted(xg, xc, side="right") - 1, 0, len(xg) - 2)
        wx = (xc - xg[j]) / (xg[j + 1] - xg[j])

        def lerp(f):
            g = lerp_t(f)
            if g.ndim == 1:
                return (1.0 - wx) * g[j] + wx * g[j + 1]
            return (1.0 - wx)[..., None] * g[j] + wx[..., None] * g[j + 1]

        return (
            lerp(self.a_field),
            lerp(self.za_field),
            lerp(self.ybar_fields),
            lerp(self.zbar_fields),
        )

    def initial_values(self, x0: float = 0.0):
        a, za, yb, zb = self.at(0.0, np.asarray(x0))
        return float(a), np.asarray(yb, dtype=float).copy()

    def to_rows(self):
        """Flattened ``(t, x, a, Z_a, Ybar_1..I, Zbar_1..I)`` records."""
        n = self.ybar_fields.shape[-1]
        rows = []
        xs = [0.0] if self.state_grid is None else list(self.state_grid)
        for k, t in enumerate(self.time_grid):
            for j, x in enumerate(xs):
                idx = (k,) if self.state_grid is None else (k, j)
                rows.append(
                    [float(t), float(x), float(self.a_field[idx]), float(self.za_field[idx])]
                    + [float(self.ybar_fields[idx + (i,)]) for i in range(n)]
                    + [float(self.zbar_fields[idx + (i,)]) for i in range(n)]
                )
        return rows

    def columns(self):
        n = self.ybar_fields.shape[-1]
        return ["t", "x", "a", "Z_a"] + [f"Ybar_{i + 1}" for i in range(n)] + [
            f"Zbar_{i + 1}" for i in range(n)
        ]


def annuity_lower_bound(model: EconomyModel, policy: UbiPolicy, t, x) -> float:
    """``-C`` with ``C = T * sup |rho_S + alpha_S (mu_D + mu_eps - mu_Lcal)|`` over the given points."""
    terms = driver_terms(model, policy, t, x)
    return -model.horizon * float(np.max(np.abs(terms.core)))


def solve_ode(model: EconomyModel, policy: UbiPolicy, n_steps: int = 10_000) -> BackwardSolution:
    """Backward RK4 for ``(a, Ybar_1..I)`` when wages are constant (all ``Z`` vanish)."""
    if n_steps < 2:
        raise StepSizeError("solve_ode needs at least 2 steps")
    if not model.constant_wages:
        raise RegimeError("the ODE regime requires constant wages")
    T = model.horizon
    tg = np.linspace(0.0, T, n_steps + 1)
    h = T / n_steps
    terms = driver_terms(model, policy, 0.0, 0.0)
    alphas, rhos = model.alphas, model.rhos
    # constant coefficients: only exp(-a) varies, so hoist everything else
    kappa, core = float(terms.kappa), float(terms.core)
    fa_const = core - 0.5 * kappa**2
    fy_const = (-rhos - 0.5 * kappa**2) / alphas + terms.m + terms.s * kappa
    inv_alpha = 1.0 / alphas

    def rhs(y):
        a = y[0]
        ea = math.exp(-a)
        out = np.empty_like(y)
        out[0] = fa_const - ea
        out[1:] = fy_const + ea * ((1.0 + a) * inv_alpha + y[1:])
        return out

    y = np.zeros(model.n_agents + 1)
    out = np.empty((n_steps + 1, model.n_agents + 1))
    out[-1] = y
    for k in range(n_steps, 0, -1):
        k1 = rhs(y)
        k2 = rhs(y - 0.5 * h * k1)
        k3 = rhs(y - 0.5 * h * k2)
        k4 = rhs(y - h * k3)
        y = y - h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k - 1] = y
    out[-1] = 0.0
    return BackwardSolution(
        regime=ODE,
        time_grid=tg,
        state_grid=None,
        a_field=out[:, 0].copy(),
        za_field=np.zeros(n_steps + 1),
        ybar_fields=out[:, 1:].copy(),
        zbar_fields=np.zeros((n_steps + 1, model.n_agents)),
        lower_bound=-T * abs(float(terms.core)),
        meta={"n_steps": n_steps},
    )


def _second_diff_banded(nx: int, dx: float, coef: float):
    """Banded form of ``I - coef * D2`` with zero curvature rows at both edges."""
    ab = np.zeros((3, nx))
    ab[1, :] = 1.0
    c = coef / dx**2
    ab[0, 2:] = -c  # super-diagonal for rows 1..nx-2
    ab[1, 1:-1] += 2.0 * c
    ab[2, :-2] = -c  # sub-diagonal for rows 1..nx-2
    return ab


def _d2(v, dx):
    out = np.zeros_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dx**2
    return out


def _d1(v, dx):
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * dx)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dx)
    return out


def _cn_picard(ab, prev, f_prev, drift, dt, dx, tol, max_iter, label):
    """One Crank-Nicolson step ``v - dt/4 D2 v = prev + dt/4 D2 prev - dt/2 (f(v) + f_prev)``."""
    base = prev + 0.25 * dt * _d2(prev, dx) - 0.5 * dt * f_prev
    v = prev.copy()
    for it in range(max_iter):
        new = solve_banded((1, 1), ab, base - 0.5 * dt * drift(v))
        diff = float(np.max(np.abs(new - v)))
        v = new
        if diff < tol:
            return v, it + 1
    raise NoConvergence(f"Picard iteration for {label} did not converge in {max_iter} steps")


def default_domain(T: float) -> tuple[float, float]:
    half = 5.0 * np.sqrt(T)
    return -half, half


def solve_pde(
    model: EconomyModel,
    policy: UbiPolicy,
    n_time: int = 200,
    n_space: int = 201,
    x_min: float | None = None,
    x_max: float | None = None,
    tol: float = PICARD_TOL,
    max_iter: int = PICARD_MAX_ITER,
) -> BackwardSolution:
    """Markov one-factor solve of ``(a, Ybar_i)`` on ``[0, T] x [x_min, x_max]``.

    ``Z_a`` and ``Zbar_i`` are central differences of the solved fields.  The
    annuity driver carries the truncation ``exp(-max(a, -N))`` with
    ``N = C + 1``; ``meta['guard_active']`` reports whether it ever bound.
    """
    T = model.horizon
    lo, hi = default_domain(T)
    x_min = lo if x_min is None else x_min
    x_max = hi if x_max is None else x_max
    if n_time < 1 or n_space < 5 or not np.isfinite(x_min) or not np.isfinite(x_max) or x_max <= x_min:
        raise GridError(f"degenerate grid nt={n_time}, nx={n_space}, x=[{x_min}, {x_max}]")
    tg = np.linspace(0.0, T, n_time + 1)
    xg = np.linspace(x_min, x_max, n_space)
    dt, dx = T / n_time, xg[1] - xg[0]
    n = model.n_agents
    alphas, rhos = model.alphas, model.rhos

    terms = [driver_terms(model, policy, t, xg) for t in tg]
    C = T * max(float(np.max(np.abs(tm.core))) for tm in terms)
    floor = -(C + 1.0)

    a = np.zeros((n_time + 1, n_space))
    za = np.zeros_like(a)
    yb = np.zeros((n_time + 1, n_space, n))
    zb = np.zeros_like(yb)
    ab = _second_diff_banded(n_space, dx, 0.25 * dt)
    iters = 0

    f_a_next = _f_a(terms[-1], a[-1], za[-1], floor)
    f_y_next = _ybar_drivers(terms[-1], alphas, rhos, yb[-1], zb[-1], a[-1], za[-1])
    for k in range(n_time - 1, -1, -1):
        tm = terms[k]
        v, it = _cn_picard(
            ab, a[k + 1], f_a_next,
            lambda v: _f_a(tm, v, _d1(v, dx), floor),
            dt, dx, tol, max_iter, "a",
        )
        iters += it
        a[k] = v
        za[k] = _d1(v, dx)
        f_a_next = _f_a(tm, a[k], za[k], floor)

        def fy(Y):
            Zs = np.stack([_d1(Y[:, i], dx) for i in range(n)], axis=1)
            return _ybar_drivers(tm, alphas, rhos, Y, Zs, a[k], za[k])

        Y = yb[k + 1].copy()
        base = yb[k + 1] + 0.25 * dt * np.stack(
            [_d2(yb[k + 1][:, i], dx) for i in range(n)], axis=1
        ) - 0.5 * dt * f_y_next
        for it in range(max_iter):
            new = solve_banded((1, 1), ab, base - 0.5 * dt * fy(Y))
            diff = float(np.max(np.abs(new - Y)))
            Y = new
            if diff < tol:
                break
        else:
            raise NoConvergence(f"Picard iteration for Ybar did not converge in {max_iter} steps")
        iters += it + 1
        yb[k] = Y
        zb[k] = np.stack([_d1(Y[:, i], dx) for i in range(n)], axis=1)
        f_y_next = _ybar_drivers(tm, alphas, rhos, yb[k], zb[k], a[k], za[k])

    guard_active = bool(np.min(a) < floor)
    if guard_active:
        log.warning("annuity truncation guard bound at min(a)=%g < %g", np.min(a), floor)
    return BackwardSolution(
        regime=PDE,
        time_grid=tg,
        state_grid=xg,
        a_field=a,
        za_field=za,
        ybar_fields=yb,
        zbar_fields=zb,
        lower_bound=-C,
        guard_floor=floor,
        meta={
            "n_time": n_time,
            "n_space": n_space,
            "x_min": float(x_min),
            "x_max": float(x_max),
            "picard_iterations": iters,
            "guard_active": guard_active,
        },
    )


def solve(model: EconomyModel, policy: UbiPolicy, regime: str | None = None, **grid) -> BackwardSolution:
    """Dispatch to :func:`solve_ode` (constant wages) or :func:`solve_pde`."""
    if regime is None:
        regime = ODE if model.constant_wages else PDE
    regime = regime.upper()
    if regime == ODE:
        return solve_ode(model, policy, grid.get("n_steps", 10_000))
    if regime == PDE:
        keys = ("n_time", "n_space", "x_min", "x_max", "tol")
        return solve_pde(model, policy, **{k: v for k, v in grid.items() if k in keys})
    raise RegimeError(f"unknown regime {regime!r}")


@dataclass(frozen=True)
class MCEstimate:
    a0: float
    a0_se: float
    ybar0: np.ndarray
    ybar0_se: np.ndarray
    n_paths: int
    n_steps: int
    n_batches: int
    batch_a0: np.ndarray = field(repr=False)
    batch_ybar0: np.ndarray = field(repr=False)


def _basis(x, scale, degree):
    u = x / scale
    return np.stack([u**d for d in range(degree + 1)], axis=1)


def _mc_batch(model, policy, m, n_steps, rng, degree):
    T = model.horizon
    dt = T / n_steps
    tg = np.linspace(0.0, T, n_steps + 1)
    dB = rng.standard_normal((m, n_steps)) * np.sqrt(dt)
    x = np.concatenate([np.zeros((m, 1)), np.cumsum(dB, axis=1)], axis=1)
    alphas, rhos = model.alphas, model.rhos
    n = model.n_agents

    tm = driver_terms(model, policy, tg[-1], x[:, -1])
    a_next = np.zeros(m)
    y_next = np.zeros((m, n))
    fa_next = _f_a(tm, a_next, 0.0)
    fy_next = _ybar_drivers(tm, alphas, rhos, y_next, np.zeros((m, n)), a_next, 0.0)

    for k in range(n_steps - 1, -1, -1):
        tm = driver_terms(model, policy, tg[k], x[:, k])
        if k == 0:
            Phi = np.ones((m, 1))
        else:
            Phi = _basis(x[:, k], np.sqrt(tg[k]), degree)
        db = dB[:, k][:, None]
        nxt = np.column_stack([a_next, y_next])
        # centring on the conditional mean keeps the Z regressions' variance O(1)
        c_nxt, *_ = np.linalg.lstsq(Phi, nxt, rcond=None)
        dev = nxt - Phi @ c_nxt
        targets = np.column_stack(
            [
                dev * db / dt,
                a_next - 0.5 * dt * fa_next,
                y_next - 0.5 * dt * fy_next,
            ]
        )
        coef, *_ = np.linalg.lstsq(Phi, targets, rcond=None)
        fit = Phi @ coef
        za = fit[:, 0]
        zb = fit[:, 1 : 1 + n]
        ga = fit[:, 1 + n]
        gy = fit[:, 2 + n :]

        a = ga.copy()
        for _ in range(PICARD_MAX_ITER):
            new = ga - 0.5 * dt * _f_a(tm, a, za)
            done = np.max(np.abs(new - a)) < 1e-14
            a = new
            if done:
                break
        # the Ybar drivers are affine in Ybar: solve the implicit half-step exactly
        gap = (tm.kappa - za)[:, None]
        ea = np.exp(-a)[:, None]
        rest = (-rhos + (1.0 + a[:, None]) * ea - 0.5 * gap**2) / alphas + tm.m + (zb + tm.s) * gap
        y = (gy - 0.5 * dt * rest) / (1.0 + 0.5 * dt * ea)

        fa_next = _f_a(tm, a, za)
        fy_next = _ybar_drivers(tm, alphas, rhos, y, zb, a, za)
        a_next, y_next = a, y
    return float(a_next.mean()), y_next.mean(axis=0)


def mc_crosscheck(
    model: EconomyModel,
    policy: UbiPolicy,
    n_paths: int,
    n_steps: int,
    seed: int | None,
    n_batches: int = 20,
    degree: int = 4,
) -> MCEstimate:
    """Regression Monte Carlo estimate of ``a(0, 0)`` and ``Ybar_i(0, 0)``.

    The paths are split into ``n_batches`` independent batches (one spawned
    seed each), each solved by backward least-squares induction with a
    trapezoidal (implicit half) step in ``Y`` and explicit ``Z``.  The standard
    errors are the spread of the batch estimates, so they include the
    regression noise that propagates backward.
    """
    if seed is None:
        raise SeedRequired("mc_crosscheck needs an explicit seed")
    if n_batches < 2 or n_paths // n_batches < degree + 2:
        raise ValueError("need at least two batches with enough paths for the regression")
    m = n_paths // n_batches
    streams = np.random.SeedSequence(seed).spawn(n_batches)
    a0s = np.empty(n_batches)
    y0s = np.empty((n_batches, model.n_agents))
    for b, ss in enumerate(streams):
        a0s[b], y0s[b] = _mc_batch(model, policy, m, n_steps, np.random.default_rng(ss), degree)
    return MCEstimate(
        a0=float(a0s.mean()),
        a0_se=float(a0s.std(ddof=1) / np.sqrt(n_batches)),
        ybar0=y0s.mean(axis=0),
        ybar0_se=y0s.std(axis=0, ddof=1) / np.sqrt(n_batches),
        n_paths=m * n_batches,
        n_steps=n_steps,
        n_batches=n_batches,
        batch_a0=a0s,
        batch_ybar0=y0s,
    )
