"""Command-line front end: ``ubi-eq <command> --economy FILE [options]``.

Every artifact starts with ``#`` metadata lines (CSV) or a ``metadata``
object (JSON) holding the command, version, economy, policy, seed and grid,
which is enough to rerun it.  Exit codes: 0 success, 2 configuration error,
3 validation error, 4 verification failure, 1 any other engine error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from typing import Any, Callable

import numpy as np

from . import __version__
from .bsde import ODE, PDE, default_domain, solve
from .config import economy_from_mapping, economy_to_mapping, load_mapping, parse_policy, policy_from_mapping, policy_to_mapping
from .equilibrium import THREADS_ENV, analytic_clearing, default_workers, martingale_test, simulate
from .errors import ConfigError, SeedRequired, UbiError, ValidationError, VerificationFailure
from .ito import sweep_classification, sweep_market
from .labor import labor_shares, realized_incomes
from .model import effective_lambda, validate_economy
from .welfare import WELFARE_STEPS, compare_policies, welfare_report

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_VALIDATION, EXIT_VERIFY = 0, 1, 2, 3, 4

DEFAULT_DELTAS = (-0.5, 0.0, 0.5, 1.0, 1.5)


class Table:
    def __init__(self, columns: list[str], rows: list[list[Any]], meta: dict[str, Any]):
        self.columns, self.rows, self.meta = columns, rows, meta

    def render(self, fmt: str) -> str:
        if fmt == "json":
            body = {"metadata": self.meta, "columns": self.columns, "rows": self.rows}
            return json.dumps(body, indent=1, sort_keys=False, default=_jsonable) + "\n"
        buf = io.StringIO()
        for key, val in self.meta.items():
            buf.write(f"# {key}: {json.dumps(val, sort_keys=True, default=_jsonable)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        return buf.getvalue()


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v)}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from exc


class Context:
    """Parsed configuration shared by all commands."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        if args.economy is None:
            raise ConfigError("--economy is required")
        self.data = load_mapping(args.economy)
        self.model = economy_from_mapping(self.data)
        if args.policy is not None:
            self.policy = parse_policy(args.policy)
        elif "policy" in self.data:
            self.policy = policy_from_mapping(self.data["policy"])
        else:
            self.policy = None
        if args.tol is not None and not args.tol > 0:
            raise ConfigError("--tol must be positive")
        validate_economy(self.model, self.policy)
        self.sweep = self.data.get("sweep", {}) or {}

    def require_policy(self):
        if self.policy is None:
            raise ConfigError("a policy is required (--policy or a 'policy' entry in the economy file)")
        return self.policy

    def require_seed(self) -> int:
        if self.args.seed is None:
            raise SeedRequired(f"{self.args.command} is stochastic and needs --seed")
        return self.args.seed

    def grid(self) -> dict[str, Any]:
        a = self.args
        regime = (a.regime or (ODE if self.model.constant_wages else PDE)).upper()
        if regime == ODE:
            return {"regime": ODE, "n_steps": a.nt if a.nt is not None else 10_000}
        lo, hi = default_domain(self.model.horizon)
        return {
            "regime": PDE,
            "n_time": a.nt if a.nt is not None else 200,
            "n_space": a.nx if a.nx is not None else 201,
            "x_min": a.xmin if a.xmin is not None else lo,
            "x_max": a.xmax if a.xmax is not None else hi,
        }

    def solve(self):
        g = self.grid()
        return solve(self.model, self.require_policy(), g.pop("regime"), **g)

    def w_grid(self) -> np.ndarray:
        a, s = self.args, self.sweep
        lo = a.wmin if a.wmin is not None else float(s.get("w_min", 0.1))
        hi = a.wmax if a.wmax is not None else float(s.get("w_max", 10.0))
        n = a.nw if a.nw is not None else int(s.get("n_w", 100))
        if n < 2 or not hi > lo:
            raise ConfigError(f"bad wage grid [{lo}, {hi}] with {n} points")
        return np.linspace(lo, hi, n)

    def deltas(self) -> list[float]:
        if self.args.deltas is not None:
            return _float_list(self.args.deltas)
        return [float(d) for d in self.sweep.get("deltas", DEFAULT_DELTAS)]

    def meta(self, **extra) -> dict[str, Any]:
        out = {
            "command": self.args.command,
            "version": __version__,
            "economy": economy_to_mapping(self.model),
            "policy": None if self.policy is None else policy_to_mapping(self.policy),
            "seed": self.args.seed,
        }
        out.update(extra)
        return out


def cmd_labor_sweep(ctx: Context) -> Table:
    policy = ctx.require_policy()
    n = ctx.model.n_agents
    w_grid, deltas = ctx.w_grid(), ctx.deltas()
    rows = []
    for d in deltas:
        p = replace(policy, delta=d)
        wages = np.repeat(w_grid[:, None], n, axis=1)
        L = labor_shares(ctx.model, p, wages)
        eps = realized_incomes(wages, L, p)
        lam = effective_lambda(p, n)
        for k, w in enumerate(w_grid):
            rows.append([float(w), d, lam, *map(float, L[k]), float(eps[k].sum())])
    cols = ["w", "delta", "lambda"] + [f"L_{i + 1}" for i in range(n)] + ["eps_sigma"]
    return Table(cols, rows, ctx.meta(grid={"w": [float(w_grid[0]), float(w_grid[-1]), len(w_grid)], "deltas": deltas}))


def cmd_market_sweep(ctx: Context) -> Table:
    w_grid, deltas = ctx.w_grid(), ctx.deltas()
    rows = sweep_market(ctx.model, ctx.require_policy(), w_grid, deltas)
    cls = sweep_classification(rows)
    for d, c in cls.items():
        print(f"delta={d:g}: kappa {c['kappa']}, r {c['r']}", file=sys.stderr)
    return Table(
        ["w", "delta", "kappa", "r"],
        [[r.w, r.delta, r.kappa, r.r] for r in rows],
        ctx.meta(
            grid={"w": [float(w_grid[0]), float(w_grid[-1]), len(w_grid)], "deltas": deltas},
            classification={f"{d:g}": c for d, c in cls.items()},
        ),
    )


def cmd_solve(ctx: Context) -> Table:
    sol = ctx.solve()
    a0, y0 = sol.initial_values()
    info = {"a0": a0, "ybar0": y0.tolist(), "lower_bound": sol.lower_bound}
    info.update({k: v for k, v in sol.meta.items() if isinstance(v, (bool, int, float, str))})
    print(f"a(0,0) = {a0!r}; Ybar(0,0) = {y0.tolist()!r}", file=sys.stderr)
    return Table(sol.columns(), sol.to_rows(), ctx.meta(grid=ctx.grid(), solution=info))


def _sim_settings(ctx: Context, paths: int, steps: int) -> dict[str, int]:
    a = ctx.args
    out = {"paths": a.paths if a.paths is not None else paths, "steps": a.steps if a.steps is not None else steps}
    if out["paths"] < 1 or out["steps"] < 1:
        raise ConfigError("--paths and --steps must be positive")
    return out


def cmd_simulate(ctx: Context) -> Table:
    seed = ctx.require_seed()
    sim = _sim_settings(ctx, 100, 200)
    sol = ctx.solve()
    ens = simulate(
        ctx.model, ctx.policy, sol, sim["paths"], sim["steps"], seed,
        store_paths=True, workers=ctx.args.threads,
    )
    n = ctx.model.n_agents
    rows = []
    for j in range(ens.n_paths):
        p = ens.path(j)
        for k in range(len(p.time)):
            ag = p.agents
            rows.append(
                [j, k, float(p.time[k]), float(p.brownian[k]), int(p.in_domain),
                 float(p.prices.annuity[k]), float(p.prices.stock[k]), float(p.prices.kappa[k])]
                + [float(v) for v in p.labor[k]]
                + [float(v) for v in ag.stock_shares[k]]
                + [float(v) for v in ag.annuity_shares[k]]
                + [float(v) for v in ag.consumption[k]]
                + [float(v) for v in ag.wealth[k]]
                + [float(v) for v in p.objective[k]]
            )
    agent_cols = [f"{name}_{i + 1}" for name in ("L", "pi", "theta", "c", "X", "V") for i in range(n)]
    summary = ens.residual_summary()
    for key, val in summary.items():
        print(f"max residual {key}: {val:.3e}", file=sys.stderr)
    return Table(
        ["path", "step", "t", "x", "in_domain", "A", "S", "kappa"] + agent_cols,
        rows,
        ctx.meta(grid=ctx.grid(), simulation=sim, residual_max=summary, excluded=ens.excluded),
    )


def cmd_verify(ctx: Context) -> Table:
    seed = ctx.require_seed()
    sim = _sim_settings(ctx, 1000, 200)
    tol = ctx.args.tol if ctx.args.tol is not None else 1e-2
    policy = ctx.require_policy()
    sol = ctx.solve()
    checks: list[tuple[str, float, float, bool]] = []

    # analytic clearing on a thinned copy of the solution grid
    ts = sol.time_grid[:: max(1, len(sol.time_grid) // 50)]
    xs = np.array([0.0]) if sol.state_grid is None else sol.state_grid[:: max(1, len(sol.state_grid) // 40)]
    worst = np.zeros(5)
    for t in ts:
        worst = np.maximum(worst, analytic_clearing(t, xs, sol, ctx.model, policy).max(axis=0))
    for name, v in zip(("stock", "annuity", "goods", "wealth", "income"), worst):
        checks.append((f"analytic_{name}", float(v), 1e-10, bool(v <= 1e-10)))

    ens = simulate(ctx.model, policy, sol, sim["paths"], sim["steps"], seed, workers=ctx.args.threads)
    for name, v in ens.residual_summary().items():
        checks.append((f"simulated_{name}", v, tol, bool(v <= tol)))
    a_gap = float(np.max(np.abs(ens.terminal_annuity - 1.0)))
    s_gap = float(np.max(ens.terminal_stock_gap))
    checks.append(("terminal_annuity", a_gap, 0.0, a_gap == 0.0))
    checks.append(("terminal_stock", s_gap, 1e-10, s_gap <= 1e-10))
    for i in range(ctx.model.n_agents):
        res = martingale_test(ens, i)
        checks.append((f"martingale_agent_{i + 1}_zscore", abs(res.gap) / res.se if res.se > 0 else 0.0, 3.0,
                       res.verdict == "martingale-consistent"))

    for name, v, thr, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {v:.3e} (limit {thr:.1e})", file=sys.stderr)
    table = Table(
        ["check", "value", "limit", "passed"],
        [[n, v, t, int(ok)] for n, v, t, ok in checks],
        ctx.meta(grid=ctx.grid(), simulation=sim, tol=tol, excluded=ens.excluded),
    )
    table.failed = [n for n, _, _, ok in checks if not ok]
    return table


def cmd_welfare(ctx: Context) -> Table:
    policy = ctx.require_policy()
    sol = ctx.solve()
    rep = welfare_report(ctx.model, policy, sol)
    eps = realized_incomes(ctx.model.wage_initial, rep.labor, policy)
    rows = [[f"agent_{i + 1}", float(rep.labor[i]), float(eps[i]), float(rep.ce[i])] for i in range(ctx.model.n_agents)]
    rows.append(["sum", float("nan"), rep.total_income, rep.aggregate])
    return Table(["agent", "L", "eps", "CE"], rows, ctx.meta(grid=ctx.grid(), **{"lambda": rep.lam}))


def cmd_policy_compare(ctx: Context) -> Table:
    policies, names = [], []
    for k, d in enumerate(ctx.data.get("policies", []) or []):
        policies.append(policy_from_mapping(d))
        names.append(str(d.get("name", f"policy_{k + 1}")))
    if ctx.args.policy is not None or (not policies and ctx.policy is not None):
        policies.insert(0, ctx.policy)
        names.insert(0, "selected")
    deltas = _float_list(ctx.args.deltas) if ctx.args.deltas is not None else [0.5, -0.5]
    rows = compare_policies(ctx.model, policies, deltas, names)
    dicts = [r.as_dict() for r in rows]
    cols = list(dicts[0])
    return Table(cols, [[d[c] for c in cols] for d in dicts], ctx.meta(socialism_deltas=deltas, ode_steps=WELFARE_STEPS))


COMMANDS: dict[str, Callable[[Context], Table]] = {
    "labor-sweep": cmd_labor_sweep,
    "market-sweep": cmd_market_sweep,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "welfare": cmd_welfare,
    "policy-compare": cmd_policy_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--economy", help="economy file (YAML or JSON)")
    common.add_argument("--policy", help="'keep,ubi[,delta]' or a policy file")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int)
    common.add_argument("--paths", type=int)
    common.add_argument("--steps", type=int)
    common.add_argument("--nt", type=int, help="time steps of the backward solve")
    common.add_argument("--nx", type=int, help="space points of the PDE solve")
    common.add_argument("--xmin", type=float)
    common.add_argument("--xmax", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--regime", choices=("ode", "pde", "ODE", "PDE"))
    common.add_argument("--wmin", type=float)
    common.add_argument("--wmax", type=float)
    common.add_argument("--nw", type=int)
    common.add_argument("--deltas", help="comma-separated delta values")
    common.add_argument(
        "--threads", type=int, default=None,
        help=f"worker threads for path simulation (default ${THREADS_ENV} or 1)",
    )
    parser = argparse.ArgumentParser(prog="ubi-eq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is None:
        args.threads = default_workers()
    try:
        ctx = Context(args)
        table = COMMANDS[args.command](ctx)
        text = table.render(args.format)
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        failed = getattr(table, "failed", [])
        if failed:
            raise VerificationFailure("failed checks: " + ", ".join(failed))
    except (ConfigError, SeedRequired) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except UbiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
