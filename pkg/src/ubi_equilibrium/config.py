"""Economy and policy configuration files (YAML or JSON).

Schema::

    horizon: 1.0
    dividend: {initial: 1.0, drift: 0.1, vol: 0.5}
    agents:
      - {alpha: 0.2, rho: 1.0, beta: -0.2, gamma: -0.3,
         wage: {initial: 2.0, drift: 0.1, vol: 0.1},
         stock_share: 0.5, annuity_share: 0.5}
    policy: {lambda_keep: 0.7, lambda_ubi: 0.2, delta: 0.5}     # optional
    policies: [{...}, ...]                                       # optional, policy-compare
    sweep: {w_min: 0.1, w_max: 10.0, n_w: 100, deltas: [0.0]}   # optional, sweeps

``gamma`` defaults to -0.3 and ``stock_share``/``annuity_share`` to ``1/I``.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .model import AgentPreferences, DiffusionSpec, EconomyModel, UbiPolicy

DEFAULT_GAMMA = -0.3


def load_mapping(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def _num(d: dict, key: str, default=None) -> float:
    if key not in d:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return float(default)
    try:
        return float(d[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key!r} must be a number, got {d[key]!r}") from exc


def _diffusion(d) -> DiffusionSpec:
    if isinstance(d, (int, float)):
        return DiffusionSpec(float(d))
    if not isinstance(d, dict):
        raise ConfigError(f"diffusion must be a number or mapping, got {d!r}")
    return DiffusionSpec(_num(d, "initial"), _num(d, "drift", 0.0), _num(d, "vol", 0.0))


def economy_from_mapping(data: dict[str, Any]) -> EconomyModel:
    agents = data.get("agents")
    if not isinstance(agents, list) or not agents:
        raise ConfigError("'agents' must be a non-empty list")
    n = len(agents)
    prefs, wages, pi0, th0 = [], [], [], []
    for k, a in enumerate(agents):
        if not isinstance(a, dict):
            raise ConfigError(f"agent {k} must be a mapping")
        if "wage" not in a:
            raise ConfigError(f"agent {k}: missing 'wage'")
        prefs.append(
            AgentPreferences(_num(a, "alpha"), _num(a, "rho"), _num(a, "beta"), _num(a, "gamma", DEFAULT_GAMMA))
        )
        wages.append(_diffusion(a["wage"]))
        pi0.append(_num(a, "stock_share", 1.0 / n))
        th0.append(_num(a, "annuity_share", 1.0 / n))
    if "dividend" not in data:
        raise ConfigError("missing required key 'dividend'")
    return EconomyModel(prefs, wages, _diffusion(data["dividend"]), _num(data, "horizon"), pi0, th0)


def policy_from_mapping(d) -> UbiPolicy:
    if not isinstance(d, dict):
        raise ConfigError(f"policy must be a mapping, got {d!r}")
    return UbiPolicy(_num(d, "lambda_keep"), _num(d, "lambda_ubi"), _num(d, "delta", 0.0))


def parse_policy(spec: str) -> UbiPolicy:
    """``"keep,ubi[,delta]"`` inline, or a path to a YAML/JSON policy mapping."""
    parts = spec.split(",")
    if len(parts) in (2, 3):
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            vals = None
        if vals is not None:
            return UbiPolicy(*vals)
    data = load_mapping(spec)
    return policy_from_mapping(data.get("policy", data))


def economy_to_mapping(model: EconomyModel) -> dict[str, Any]:
    """Inverse of :func:`economy_from_mapping`, used for artifact metadata."""
    return {
        "horizon": model.horizon,
        "dividend": _diffusion_dict(model.dividend),
        "agents": [
            {
                "alpha": a.alpha, "rho": a.rho, "beta": a.beta, "gamma": a.gamma,
                "wage": _diffusion_dict(w), "stock_share": p, "annuity_share": t,
            }
            for a, w, p, t in zip(
                model.agents, model.wages, model.initial_stock_shares, model.initial_annuity_shares
            )
        ],
    }


def _diffusion_dict(d: DiffusionSpec) -> dict[str, float]:
    return {"initial": d.initial, "drift": d.drift, "vol": d.vol}


def policy_to_mapping(p: UbiPolicy) -> dict[str, float]:
    return {"lambda_keep": p.lambda_keep, "lambda_ubi": p.lambda_ubi, "delta": p.delta}
