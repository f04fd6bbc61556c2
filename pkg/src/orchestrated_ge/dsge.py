"""Linearization around the steady state, shock simulation and Taylor-rule SLO control."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .analysis import FD_STEP, jacobian, power_iteration_norm
from .consumer import welfare
from .equilibrium import Economy, EconomyState, TatonnementConfig, phi_step, solve
from .errors import ParameterError, PreconditionError

__all__ = [
    "Linearization",
    "ShockSpec",
    "ShockTrace",
    "ImpulseResponse",
    "TaylorRule",
    "PolicyStep",
    "PolicyTrace",
    "spectral_radius",
    "linearize",
    "simulate_shocks",
    "impulse_response",
    "fit_decay_rate",
    "taylor_update",
    "policy_experiment",
    "write_dsge_csv",
    "DSGE_COLUMNS",
]

DSGE_COLUMNS = ("t", "deviation", "lambda1", "lambda2", "mean_lat", "mean_qual", "welfare")
WEIGHT_FLOOR = 1e-6


def spectral_radius(J: np.ndarray, restarts: int = 5, iters: int = 2000, seed: int = 0) -> tuple[float, np.ndarray]:
    """Largest ``|eigenvalue|`` by power iteration with random restarts.

    The growth rate is averaged in log space over the second half of the run,
    which also handles complex-conjugate dominant pairs.
    """
    J = np.asarray(J, dtype=float)
    rng = np.random.default_rng(seed)
    best, best_v = 0.0, np.zeros(J.shape[0])
    for _ in range(restarts):
        v = rng.standard_normal(J.shape[0])
        v /= np.linalg.norm(v)
        logs = []
        for _ in range(iters):
            w = J @ v
            nw = np.linalg.norm(w)
            if nw == 0.0:
                logs.append(-np.inf)
                break
            logs.append(np.log(nw))
            v = w / nw
        tail = logs[len(logs) // 2:]
        rho = float(np.exp(np.mean(tail))) if tail and np.all(np.isfinite(tail)) else 0.0
        if rho > best:
            best, best_v = rho, v
    return best, best_v


@dataclass
class Linearization:
    jacobian: np.ndarray = field(repr=False)
    spectral_radius: float
    norm_estimate: float
    stable: bool
    dominant_vector: np.ndarray = field(repr=False)


def _fixed_point_residual(state, econ, config) -> float:
    return float(np.linalg.norm(phi_step(state, econ, config).vector() - state.vector()))


def linearize(econ: Economy, config: TatonnementConfig, state_star: EconomyState, h: float = FD_STEP,
              tol: float | None = None) -> Linearization:
    """Jacobian at a steady state and its spectral radius; stable iff ``rho < 1``."""
    tol = max(10 * config.tol, 1e-8) if tol is None else tol
    res = _fixed_point_residual(state_star, econ, config)
    if res > tol:
        raise PreconditionError(f"state is not a fixed point (residual {res:.2e} > {tol:.0e})")
    J = jacobian(econ, config, state_star, h)
    rho, v = spectral_radius(J)
    norm, _ = power_iteration_norm(J)
    return Linearization(J, rho, norm, rho < 1.0, v)


# ------------------------------------------------------------------ shocks


@dataclass(frozen=True)
class ShockSpec:
    """Zero-mean additive shocks on supply coordinates, ``sigma`` scalar or ``(A, K)``."""

    sigma: object = 0.0
    distribution: str = "gaussian"
    seed: int = 0
    horizon: int = 100

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ParameterError("shock sigma must be finite and nonnegative")
        if self.distribution not in ("gaussian", "uniform"):
            raise ParameterError(f"unknown shock distribution {self.distribution!r}")
        if self.horizon < 1:
            raise ParameterError("shock horizon must be >= 1")

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        s = np.broadcast_to(np.asarray(self.sigma, dtype=float), shape)
        if self.distribution == "gaussian":
            return s * rng.standard_normal(shape)
        # unit-variance uniform on [-sqrt 3, sqrt 3]
        return s * rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), shape)


@dataclass
class ShockTrace:
    states: np.ndarray  # (horizon + 1, n_state)
    deviations: np.ndarray | None  # distance from the reference state, if given
    shocks: np.ndarray  # (horizon, A, K)

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviations)) if self.deviations is not None else float("nan")


def simulate_shocks(econ: Economy, config: TatonnementConfig, shocks: ShockSpec,
                    init: EconomyState | None = None, reference: EconomyState | None = None) -> ShockTrace:
    """Iterate ``x_{t+1} = Phi(Proj[y_t + eps_t], p_t, pi_t)``; deterministic under ``shocks.seed``."""
    from .equilibrium import default_state

    state = init if init is not None else default_state(econ)
    rng = np.random.default_rng(shocks.seed)
    shape = (econ.A, econ.K)
    xs = [state.vector()]
    eps_all = np.zeros((shocks.horizon,) + shape)
    for t in range(shocks.horizon):
        eps = shocks.draw(rng, shape)
        eps_all[t] = eps
        if np.any(eps != 0):
            state = EconomyState(econ.project(state.y + eps), state.p, state.pi)
        state = phi_step(state, econ, config)
        xs.append(state.vector())
    xs = np.array(xs)
    dev = np.linalg.norm(xs - reference.vector(), axis=1) if reference is not None else None
    return ShockTrace(xs, dev, eps_all)


@dataclass
class ImpulseResponse:
    deviations: np.ndarray  # ||x_t - x*|| for t = 0..horizon
    decay_rate: float
    states: np.ndarray = field(repr=False)


def fit_decay_rate(deviations, floor: float = 1e-14) -> float:
    """Geometric rate from a least-squares line through ``log`` deviations on the tail half."""
    d = np.asarray(deviations, dtype=float)
    t = np.arange(d.size)
    tail = slice(d.size // 2, None)
    t, d = t[tail], d[tail]
    keep = d > floor
    if keep.sum() < 2:
        return 0.0
    slope = np.polyfit(t[keep], np.log(d[keep]), 1)[0]
    return float(np.exp(slope))


def impulse_response(econ: Economy, config: TatonnementConfig, state_star: EconomyState, impulse,
                     horizon: int = 60) -> ImpulseResponse:
    """One-time supply impulse at ``t = 0`` (re-projected), then unshocked iteration."""
    imp = np.asarray(impulse, dtype=float).reshape(econ.A, econ.K)
    x_star = state_star.vector()
    state = EconomyState(econ.project(state_star.y + imp), state_star.p, state_star.pi) if np.any(imp != 0) else state_star
    xs = [state.vector()]
    for _ in range(horizon):
        state = phi_step(state, econ, config)
        xs.append(state.vector())
    xs = np.array(xs)
    dev = np.linalg.norm(xs - x_star, axis=1)
    return ImpulseResponse(dev, fit_decay_rate(dev), xs)


# -------------------------------------------------------------- Taylor rule


@dataclass(frozen=True)
class TaylorRule:
    lambda1_star: float
    lambda2_star: float
    phi_lat: float = 0.0
    phi_qual: float = 0.0
    lat_target: float = 0.0
    qual_target: float = 0.0

    def __post_init__(self):
        if not (self.lambda1_star > 0 and self.lambda2_star > 0):
            raise ParameterError("base SLO weights must be positive")
        if self.phi_lat < 0 or self.phi_qual < 0:
            raise ParameterError("Taylor gains must be nonnegative")


def taylor_update(rule: TaylorRule, observed_lat: float, observed_qual: float) -> tuple[float, float]:
    """Latency- and quality-targeting weights, floored at ``1e-6``."""
    l1 = rule.lambda1_star + rule.phi_lat * (observed_lat - rule.lat_target)
    l2 = rule.lambda2_star + rule.phi_qual * (rule.qual_target - observed_qual)
    return max(l1, WEIGHT_FLOOR), max(l2, WEIGHT_FLOOR)


@dataclass
class PolicyStep:
    step: int
    lambda1: float
    lambda2: float
    mean_lat: float
    mean_qual: float
    welfare: float
    converged: bool
    pi: np.ndarray
    deviation: float


@dataclass
class PolicyTrace:
    steps: list[PolicyStep]

    @property
    def all_converged(self) -> bool:
        return all(s.converged for s in self.steps)

    @property
    def latency_trend_ok(self) -> bool:
        """Across steps, a higher ``lambda1`` never comes with a higher mean latency."""
        pairs = [(s.lambda1, s.mean_lat) for s in self.steps]
        return all(
            not (b[0] > a[0] and b[1] > a[1] + 1e-12) for a, b in zip(pairs, pairs[1:])
        )


def policy_experiment(econ: Economy, config: TatonnementConfig, rule: TaylorRule, steps: int = 5,
                      init: EconomyState | None = None) -> PolicyTrace:
    """Closed loop: solve, observe ``E_pi[lat]`` and ``E_pi[qual]``, update the weights, re-solve."""
    if steps < 1:
        raise ParameterError("need at least one step")
    l1, l2 = rule.lambda1_star, rule.lambda2_star
    slo = econ.welfare.slo
    out = []
    prev = None
    for k in range(steps):
        e = econ.replace(welfare=econ.welfare.with_weights(l1, l2))
        # every step starts from the same point, so equal weights give identical equilibria
        rep = solve(e, config, init, record_trace=False, n_samples=10)
        state = rep.state
        pi = state.pi
        lat, qual = float(pi @ slo.lat), float(pi @ slo.qual)
        dev = float(np.linalg.norm(state.vector() - prev)) if prev is not None else 0.0
        prev = state.vector()
        out.append(PolicyStep(k, l1, l2, lat, qual, welfare(pi, e.welfare), rep.converged, pi.copy(), dev))
        l1, l2 = taylor_update(rule, lat, qual)
    return PolicyTrace(out)


def write_dsge_csv(rows, path) -> None:
    """``rows`` are tuples in ``DSGE_COLUMNS`` order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DSGE_COLUMNS)
        for r in rows:
            w.writerow([repr(int(r[0]))] + [repr(float(v)) for v in r[1:]])
