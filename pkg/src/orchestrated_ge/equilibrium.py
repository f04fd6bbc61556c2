"""Projected economy, the tatonnement map and equilibrium verification.

One step of the map updates supplies, prices and routing in sequence:

1. ``y' = Proj_Y[y + alpha (d(pi) - y)]``
2. ``s'_a = <p_a, y'_a>``
3. ``p'`` from mechanism A (``normalize(max(0, p + beta z))``) or mechanism B
   (a fixed linear operator of spectral norm ``gamma_A`` applied to ``y'``,
   projected onto the price simplex)
4. ``pi' = softmax(-(V(s') + penalty) / tau)``
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .consumer import WelfareSpec, path_penalties, saturate_budget, slo_feasible, welfare
from .dag import Dag, PathSet, WorkloadProfile, bellman_values, demand, softmax_routing
from .errors import DimensionError, ParameterError, SaturationUndefinedError
from .production import ProductionSet
from .trajectory import SfslBasis

__all__ = [
    "Economy",
    "EconomyState",
    "TatonnementConfig",
    "EquilibriumResiduals",
    "EquilibriumReport",
    "project_simplex",
    "default_state",
    "state_violations",
    "excess_demand",
    "walras_residual",
    "phi_step",
    "solve",
    "verify_equilibrium",
    "write_trace_csv",
    "TRACE_COLUMNS",
    "STATE_COLUMNS",
    "write_state_csv",
    "read_state_csv",
]

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("iter", "step_norm", "walras_residual", "e1", "e2", "e3", "welfare", "budget_residual", "mu")


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum x = 1}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / idx > 0)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True, eq=False)
class Economy:
    """The K-projected economy: basis, sets, routing graph and welfare."""

    basis: SfslBasis
    sets: tuple[ProductionSet, ...]
    dag: Dag
    paths: PathSet
    workload: WorkloadProfile
    welfare: WelfareSpec
    mechanism: str = "B"
    penalty_shaping: bool = True

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(self.sets))
        if self.mechanism not in ("A", "B"):
            raise ParameterError(f"unknown price mechanism {self.mechanism!r}")
        if len(self.sets) != self.dag.n_nodes:
            raise DimensionError(f"{len(self.sets)} production sets for {self.dag.n_nodes} agents")
        for a, s in enumerate(self.sets):
            if s.dim != self.basis.K:
                raise DimensionError(f"set {a} has dimension {s.dim}, basis has K={self.basis.K}")
        if self.workload.units.shape != (self.A, len(self.paths), self.K):
            raise DimensionError("workload profile does not match agents, paths and K")
        if self.welfare.n_paths != len(self.paths):
            raise DimensionError("welfare spec does not cover every path")
        object.__setattr__(self, "_operators", {})

    @property
    def A(self) -> int:
        return self.dag.n_nodes

    @property
    def K(self) -> int:
        return self.basis.K

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def n_state(self) -> int:
        return 2 * self.A * self.K + self.n_paths

    def price_operator(self, gamma: float, seed: int) -> np.ndarray:
        """Seeded random ``AK x AK`` matrix rescaled to spectral norm ``gamma``."""
        key = (float(gamma), int(seed))
        ops = self._operators
        if key not in ops:
            n = self.A * self.K
            m = np.random.default_rng(seed).standard_normal((n, n))
            ops[key] = m * (gamma / np.linalg.norm(m, 2)) if gamma > 0 else np.zeros((n, n))
        return ops[key]

    def project(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.vstack([s.project(y[a]) for a, s in enumerate(self.sets)])

    def profits(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.array([s.support(p[a]) for a, s in enumerate(self.sets)])

    def supplies(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.vstack([s.supply(p[a]) for a, s in enumerate(self.sets)])

    def demand(self, pi) -> np.ndarray:
        return demand(pi, self.workload, self.paths)

    def replace(self, **changes) -> "Economy":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class EconomyState:
    """``(y, p, pi)``: supplies ``(A, K)``, prices ``(A, K)`` on the simplex, routing ``(|P|,)``."""

    y: np.ndarray
    p: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        for name in ("y", "p", "pi"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.y.shape != self.p.shape or self.y.ndim != 2 or self.pi.ndim != 1:
            raise DimensionError("state blocks have inconsistent shapes")

    def vector(self) -> np.ndarray:
        return np.concatenate([self.y.ravel(), self.p.ravel(), self.pi])

    @classmethod
    def from_vector(cls, x, A: int, K: int) -> "EconomyState":
        x = np.asarray(x, dtype=float)
        n = A * K
        return cls(x[:n].reshape(A, K), x[n:2 * n].reshape(A, K), x[2 * n:])


@dataclass(frozen=True)
class TatonnementConfig:
    alpha: float = 0.1
    beta: float = 0.5
    tau: float = 2.7
    gamma_A: float = 0.5
    demand_mode: str = "saturated"
    tol: float = 1e-10
    max_iter: int = 100_000
    seed: int = 0

    def __post_init__(self):
        # the open interval is the contract; endpoints are kept for degenerate diagnostics
        if not (0.0 <= self.alpha <= 1.0):
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.tau > 0:
            raise ParameterError(f"tau must be positive, got {self.tau}")
        if self.beta < 0 or self.gamma_A < 0:
            raise ParameterError("beta and gamma_A must be nonnegative")
        if self.demand_mode not in ("raw", "saturated"):
            raise ParameterError(f"unknown demand mode {self.demand_mode!r}")
        if not self.tol > 0 or self.max_iter < 1:
            raise ParameterError("tol must be positive and max_iter >= 1")


def default_state(econ: Economy) -> EconomyState:
    """Supplies at the projection of 0, uniform prices, uniform routing."""
    A, K = econ.A, econ.K
    return EconomyState(econ.project(np.zeros((A, K))), np.full((A, K), 1.0 / (A * K)), np.full(econ.n_paths, 1.0 / econ.n_paths))


def state_violations(state: EconomyState, econ: Economy, tol: float = 1e-8) -> list[str]:
    """Invariants of the state space; empty list means the state is in Omega_K."""
    out = []
    if state.y.shape != (econ.A, econ.K) or state.pi.shape != (econ.n_paths,):
        return ["state shape does not match the economy"]
    if np.any(state.p < 0) or abs(state.p.sum() - 1.0) > 1e-12:
        out.append("prices are not on the simplex")
    if np.any(state.pi < 0) or abs(state.pi.sum() - 1.0) > 1e-12:
        out.append("routing policy is not on the simplex")
    resid = np.linalg.norm(econ.project(state.y) - state.y, axis=1)
    for a in np.flatnonzero(resid > tol):
        out.append(f"supply of agent {a} lies outside its production set ({resid[a]:.2e})")
    return out


def _effective_demand(p, d, econ: Economy, mode: str):
    """Demand entering excess demand: raw or budget-saturated, with fallback flag."""
    if mode == "raw":
        return d, 1.0, False
    try:
        dt, mu = saturate_budget(p, d, econ.profits(p))
        return dt, mu, False
    except SaturationUndefinedError:
        log.debug("budget saturation undefined, falling back to raw demand")
        return d, float("nan"), True


def excess_demand(state: EconomyState, econ: Economy, config: TatonnementConfig) -> np.ndarray:
    """``z_a = d~_a - y_a`` with ``d~`` raw or budget-saturated per ``config.demand_mode``."""
    d = econ.demand(state.pi)
    dt, _, _ = _effective_demand(state.p, d, econ, config.demand_mode)
    return dt - state.y


def walras_residual(state: EconomyState, econ: Economy, config: TatonnementConfig, at_supply: bool = True) -> float:
    """Value of aggregate excess demand ``sum_a <p_a, z_a>``.

    With ``at_supply`` the firms' side is their optimal supply at ``p``; otherwise
    the state's own supplies are used.
    """
    d = econ.demand(state.pi)
    dt, _, _ = _effective_demand(state.p, d, econ, config.demand_mode)
    y = econ.supplies(state.p) if at_supply else state.y
    return float(np.sum(state.p * (dt - y)))


def phi_step(state: EconomyState, econ: Economy, config: TatonnementConfig) -> EconomyState:
    """One application of the equilibrium map; no invariant checks, so it also accepts FD-perturbed inputs."""
    y, p, pi = state.y, state.p, state.pi
    d = econ.demand(pi)
    # convex-combination form keeps alpha = 0 and alpha = 1 exact
    y_new = econ.project((1.0 - config.alpha) * y + config.alpha * d)
    s = np.sum(p * y_new, axis=1)

    if econ.mechanism == "A":
        dt, _, _ = _effective_demand(p, d, econ, config.demand_mode)
        q = np.maximum(0.0, p + config.beta * (dt - y_new))
        total = q.sum()
        if total > 0:
            p_new = q / total
        else:
            log.warning("price update annihilated every price; resetting to the uniform simplex point")
            p_new = np.full_like(p, 1.0 / p.size)
    else:
        op = econ.price_operator(config.gamma_A, config.seed)
        p_new = project_simplex(op @ y_new.ravel()).reshape(p.shape)

    values = bellman_values(s, econ.dag, econ.paths)
    if econ.penalty_shaping:
        values = values + path_penalties(econ.welfare)
    return EconomyState(y_new, p_new, softmax_routing(values, config.tau))


@dataclass
class EquilibriumResiduals:
    e1: float
    e2: float
    e3: float
    walras: float
    budget: float
    welfare: float
    mu: float
    e2_witness: np.ndarray | None = None

    def passed(self, e1: float = np.inf, e2: float = np.inf, e3: float = 1e-6) -> bool:
        return self.e1 <= e1 and self.e2 <= e2 and self.e3 <= e3


class _PolicySampler:
    """Fixed cloud of candidate policies (vertices plus Dirichlet draws)."""

    def __init__(self, n_paths: int, n_samples: int, seed: int):
        rng = np.random.default_rng(seed)
        draws = rng.dirichlet(np.ones(n_paths), size=max(n_samples - n_paths, 0))
        self.points = np.vstack([np.eye(n_paths), draws])[:max(n_samples, n_paths)]

    def e2(self, state: EconomyState, econ: Economy):
        pts = self.points
        s = econ.welfare.slo
        feas = (pts @ s.lat <= s.L_max + 1e-9) & (pts @ s.qual >= s.Q_min - 1e-9) & (pts @ s.cost <= s.C_max + 1e-9)
        spend = np.einsum("nq,aqk,ak->n", pts, econ.workload.units, state.p)
        feas &= spend <= econ.profits(state.p).sum() + 1e-12
        if not feas.any():
            return 0.0, None
        w = welfare(pts[feas], econ.welfare)
        gain = w - welfare(state.pi, econ.welfare)
        i = int(np.argmax(gain))
        return max(0.0, float(gain[i])), pts[feas][i] if gain[i] > 0 else None


def _residuals(state, econ, config, sampler) -> EquilibriumResiduals:
    p, y = state.p, state.y
    prof = econ.profits(p)
    d = econ.demand(state.pi)
    e1 = float(np.max(np.abs(prof - np.sum(p * y, axis=1))))
    e2, witness = sampler.e2(state, econ)
    e3 = float(np.max(np.linalg.norm(d - y, axis=1)))
    dt, mu, _ = _effective_demand(p, d, econ, config.demand_mode)
    walras = float(np.sum(p * (dt - econ.supplies(p))))
    return EquilibriumResiduals(
        e1=e1, e2=e2, e3=e3, walras=walras,
        budget=float(np.sum(p * d) - prof.sum()),
        welfare=welfare(state.pi, econ.welfare), mu=mu, e2_witness=witness,
    )


def verify_equilibrium(state: EconomyState, econ: Economy, config: TatonnementConfig | None = None,
                       n_samples: int = 1000, seed: int = 0) -> EquilibriumResiduals:
    """E1 (firm optimality), E2 (sampled consumer dominance), E3 (market clearing) residuals."""
    config = config or TatonnementConfig()
    return _residuals(state, econ, config, _PolicySampler(econ.n_paths, n_samples, seed))


@dataclass
class EquilibriumReport:
    state: EconomyState
    iterations: int
    converged: bool
    step_norms: list[float]
    residuals: EquilibriumResiduals
    trace: list[tuple] = field(default_factory=list)
    history: np.ndarray | None = None
    lam: float | None = None
    banach_ok: bool | None = None

    @property
    def walras_trace(self) -> list[float]:
        return [row[2] for row in self.trace]


def solve(econ: Economy, config: TatonnementConfig, init: EconomyState | None = None, *,
          lam: float | None = None, keep_history: bool = False, record_trace: bool = True,
          n_samples: int = 200) -> EquilibriumReport:
    """Iterate the map until ``||x_{n+1} - x_n|| <= tol`` or ``max_iter``.

    With ``lam`` (a contraction modulus estimate) the report also checks the
    a-priori bound ``lam^n / (1 - lam) ||x_1 - x_0||`` against the distance of
    each iterate from the final state.
    """
    state = init if init is not None else default_state(econ)
    sampler = _PolicySampler(econ.n_paths, n_samples, config.seed)
    x = state.vector()
    history = [x] if (keep_history or lam is not None) else None
    steps: list[float] = []
    trace: list[tuple] = []
    converged = False
    n = 0
    for n in range(1, config.max_iter + 1):
        new = phi_step(state, econ, config)
        x_new = new.vector()
        dx = float(np.linalg.norm(x_new - x))
        steps.append(dx)
        state, x = new, x_new
        if history is not None:
            history.append(x)
        if record_trace:
            r = _residuals(state, econ, config, sampler)
            trace.append((n, dx, r.walras, r.e1, r.e2, r.e3, r.welfare, r.budget, r.mu))
        if not np.isfinite(dx):
            break
        if dx <= config.tol:
            converged = True
            break
    hist = np.array(history) if history is not None else None
    banach_ok = None
    if lam is not None and 0 <= lam < 1 and hist is not None and len(hist) > 1:
        first = np.linalg.norm(hist[1] - hist[0])
        bounds = lam ** np.arange(len(hist)) / (1 - lam) * first
        banach_ok = bool(np.all(np.linalg.norm(hist - hist[-1], axis=1) <= bounds + config.tol))
    final = _residuals(state, econ, config, _PolicySampler(econ.n_paths, 1000, config.seed))
    return EquilibriumReport(state, n, converged, steps, final, trace, hist if keep_history else None, lam, banach_ok)


def _fmt(v) -> str:
    return repr(int(v)) if isinstance(v, (int, np.integer)) else repr(float(v))


def write_trace_csv(report: EquilibriumReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in report.trace:
            w.writerow([_fmt(v) for v in row])


STATE_COLUMNS = ("block", "agent", "index", "value")


def write_state_csv(state: EconomyState, path) -> None:
    """One row per coordinate; the policy block uses ``agent = -1``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STATE_COLUMNS)
        for block, arr in (("y", state.y), ("p", state.p)):
            for a, k in np.ndindex(arr.shape):
                w.writerow((block, a, k, repr(float(arr[a, k]))))
        for q, v in enumerate(state.pi):
            w.writerow(("pi", -1, q, repr(float(v))))


def read_state_csv(path, A: int, K: int, n_paths: int) -> EconomyState:
    y, p, pi = np.full((A, K), np.nan), np.full((A, K), np.nan), np.full(n_paths, np.nan)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != STATE_COLUMNS:
            raise ParameterError(f"state file header must be {','.join(STATE_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                block, a, k, v = row["block"], int(row["agent"]), int(row["index"]), float(row["value"])
                if block == "pi":
                    pi[k] = v
                elif block in ("y", "p"):
                    (y if block == "y" else p)[a, k] = v
                else:
                    raise ParameterError(f"unknown block {block!r}")
            except (ValueError, IndexError) as exc:
                raise ParameterError(f"state file line {lineno}: {exc}") from None
    if np.isnan(y).any() or np.isnan(p).any() or np.isnan(pi).any():
        raise ParameterError("state file does not cover every coordinate of the economy")
    return EconomyState(y, p, pi)
