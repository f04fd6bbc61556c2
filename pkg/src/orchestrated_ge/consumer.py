"""Orchestrator-as-consumer: welfare, SLO constraint set and budget accounting."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, ParameterError, SaturationUndefinedError

__all__ = [
    "SloParams",
    "WelfareSpec",
    "SloReport",
    "path_penalties",
    "welfare",
    "slo_feasible",
    "budget_residual",
    "saturate_budget",
    "derived_path_metric",
]

FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SloParams:
    """SLO weights, caps and per-path observable aggregates."""

    lambda1: float
    lambda2: float
    lat: np.ndarray
    qual: np.ndarray
    cost: np.ndarray
    L_max: float = np.inf
    Q_min: float = -np.inf
    C_max: float = np.inf

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ParameterError("SLO weights lambda1, lambda2 must be positive")
        arrays = [np.array(getattr(self, k), dtype=float) for k in ("lat", "qual", "cost")]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
            raise DimensionError("lat, qual and cost must be vectors of equal length")
        for name, a in zip(("lat", "qual", "cost"), arrays):
            if not np.all(np.isfinite(a)):
                raise ParameterError(f"{name} aggregates must be finite")
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def q_ref(self) -> float:
        # quality penalty is measured against the floor; an absent floor leaves only the slope
        return float(self.Q_min) if np.isfinite(self.Q_min) else 0.0


@dataclass(frozen=True, eq=False)
class WelfareSpec:
    reg: np.ndarray
    slo: SloParams
    epsilon: float = 0.0

    def __post_init__(self):
        reg = np.array(self.reg, dtype=float)
        if reg.shape != self.slo.lat.shape:
            raise DimensionError("reg penalties must have one entry per path")
        if not np.all(np.isfinite(reg)) or np.any(reg < 0):
            raise ParameterError("reg penalties must be finite and nonnegative")
        if self.epsilon < 0:
            raise ParameterError("entropy weight must be nonnegative")
        reg.setflags(write=False)
        object.__setattr__(self, "reg", reg)

    @property
    def n_paths(self) -> int:
        return self.reg.size

    def with_weights(self, lambda1: float, lambda2: float) -> "WelfareSpec":
        return replace(self, slo=replace(self.slo, lambda1=lambda1, lambda2=lambda2))


def path_penalties(spec: WelfareSpec) -> np.ndarray:
    """Per-path SLO loss ``reg + lambda1 lat + lambda2 (Q_ref - qual)``."""
    s = spec.slo
    return spec.reg + s.lambda1 * s.lat + s.lambda2 * (s.q_ref - s.qual)


def _policy(policy, n: int) -> np.ndarray:
    pi = np.asarray(policy, dtype=float)
    if pi.shape[-1] != n:
        raise DimensionError(f"policy has {pi.shape[-1]} weights for {n} paths")
    return pi


def welfare(policy, spec: WelfareSpec):
    """``W(pi) = -L(pi)``; accepts a single policy or a stack of them (last axis = paths)."""
    pi = _policy(policy, spec.n_paths)
    w = -(pi @ path_penalties(spec))
    if spec.epsilon > 0:
        plogp = np.where(pi > 0, pi * np.log(np.where(pi > 0, pi, 1.0)), 0.0)
        w = w - spec.epsilon * plogp.sum(axis=-1)
    return float(w) if np.ndim(w) == 0 else w


@dataclass
class SloReport:
    feasible: bool
    latency_slack: float
    quality_slack: float
    cost_slack: float


def slo_feasible(policy, spec: WelfareSpec) -> SloReport:
    pi = _policy(policy, spec.n_paths)
    s = spec.slo
    slack = (
        float(s.L_max - pi @ s.lat),
        float(pi @ s.qual - s.Q_min),
        float(s.C_max - pi @ s.cost),
    )
    return SloReport(all(v >= -FEASIBILITY_TOL for v in slack), *slack)


def budget_residual(prices, demand, profits) -> float:
    """Expenditure minus total profit; ``<= 0`` is budget-feasible, ``0`` binding."""
    p, d = np.asarray(prices, dtype=float), np.asarray(demand, dtype=float)
    if p.shape != d.shape:
        raise DimensionError(f"prices {p.shape} and demand {d.shape} differ")
    return float(np.sum(p * d) - np.sum(profits))


def saturate_budget(prices, demand, profits) -> tuple[np.ndarray, float]:
    """Scale demand by ``mu`` so that the budget binds exactly."""
    p, d = np.asarray(prices, dtype=float), np.asarray(demand, dtype=float)
    value = float(np.sum(p * d))
    total = float(np.sum(profits))
    if value == 0.0 and total == 0.0:
        return d.copy(), 1.0
    if value == 0.0 or total / value < 0:
        raise SaturationUndefinedError(f"cannot saturate: demand value {value:.3e}, profits {total:.3e}")
    mu = total / value + 0.0
    return mu * d, mu


def derived_path_metric(supplies, paths, direction) -> np.ndarray:
    """Per-path aggregate ``sum_{a in q} <direction, y_a>`` read off supplies."""
    y = np.asarray(supplies, dtype=float)
    per_agent = y @ np.asarray(direction, dtype=float)
    return np.array([per_agent[list(q)].sum() for q in paths.paths])
