"""Welfare-theorem checks, contraction diagnostics and the nested-K sweep."""
from __future__ import annotations

import csv
import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .consumer import slo_feasible, welfare
from .equilibrium import (
    Economy,
    EconomyState,
    TatonnementConfig,
    phi_step,
    solve,
)
from .errors import GridInfeasibleError, NoGuaranteeError, NotSupportableError, ParameterError
from .trajectory import sfsl_reconstruct

__all__ = [
    "ContractionReport",
    "ParetoReport",
    "SupportReport",
    "SweepReport",
    "contraction_bound",
    "iterations_to_accuracy",
    "jacobian",
    "power_iteration_norm",
    "estimate_contraction",
    "pareto_check",
    "policy_grid",
    "supporting_prices",
    "bewley_sweep",
    "write_sweep_csv",
    "write_pareto_csv",
]

FD_STEP = 1e-6
POWER_TOL = 1e-10
# 50 sweeps under-resolve clustered top singular values; the tolerance usually stops far earlier
POWER_MAX_ITER = 500
PARETO_MAX_PATHS = 5
PARETO_MIN_STEP = 0.02
PARETO_MAX_STEP = 0.1
STRICT_MARGIN = 1e-9
WEAK_SLACK = 1e-12
CERT_TOL = 1e-8


def _exact(x) -> Fraction:
    # repr round-trips a float to its shortest decimal, so 0.1 becomes 1/10 exactly
    return Fraction(repr(float(x))) if not isinstance(x, (int, Fraction)) else Fraction(x)


def contraction_bound(alpha: float, gamma_A: float, depth_P: int, tau: float) -> float:
    """Sufficient contraction modulus ``(1 - alpha) gamma_A P / tau``.

    Evaluated in exact rational arithmetic on the decimal inputs, so the
    reference cases come out as exactly ``1.0`` and ``0.5``.
    """
    if not (0 < alpha < 1):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if gamma_A < 0 or not math.isfinite(gamma_A):
        raise ParameterError(f"gamma_A must be nonnegative, got {gamma_A}")
    if int(depth_P) != depth_P or depth_P < 1:
        raise ParameterError(f"path depth must be a positive integer, got {depth_P}")
    if not (tau > 0) or not math.isfinite(tau):
        raise ParameterError(f"tau must be positive, got {tau}")
    lam = (1 - _exact(alpha)) * _exact(gamma_A) * int(depth_P) / _exact(tau)
    return float(lam)


def iterations_to_accuracy(lam: float, rel_tol: float, convention: str = "plain") -> int:
    """Smallest ``n >= 1`` with ``lam**n <= rel_tol`` (``plain``) or
    ``lam**n / (1 - lam) <= rel_tol`` (``banach``, the a-priori error bound)."""
    if not (lam < 1):
        raise NoGuaranteeError(f"no convergence guarantee for lambda = {lam}")
    if lam < 0:
        raise ParameterError(f"lambda must be nonnegative, got {lam}")
    if not (0 < rel_tol < 1):
        raise ParameterError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    if convention == "plain":
        target = rel_tol
    elif convention == "banach":
        target = rel_tol * (1 - lam)
    else:
        raise ParameterError(f"unknown convention {convention!r}")
    if lam == 0:
        return 1
    n = max(1, math.ceil(math.log(target) / math.log(lam)))
    # guard the log estimate against rounding at exact powers
    while n > 1 and lam ** (n - 1) <= target:
        n -= 1
    while lam ** n > target:
        n += 1
    return n


def jacobian(econ: Economy, config: TatonnementConfig, state: EconomyState, h: float = FD_STEP) -> np.ndarray:
    """Finite-difference Jacobian of ``phi_step`` on the concatenated ``(y, p, pi)`` coordinates.

    Central differences, except one-sided (forward) ones for price or policy
    entries closer than ``10 h`` to zero, where a warning is emitted.
    """
    x = state.vector()
    n = x.size
    AK = econ.A * econ.K
    near = np.zeros(n, dtype=bool)
    near[AK:] = x[AK:] < 10 * h
    if near.any():
        warnings.warn(
            f"{int(near.sum())} price/policy coordinates within 10h of the simplex boundary; "
            "using one-sided differences there",
            RuntimeWarning,
            stacklevel=2,
        )

    def f(v):
        return phi_step(EconomyState.from_vector(v, econ.A, econ.K), econ, config).vector()

    fx = f(x) if near.any() else None
    J = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        if near[i]:
            J[:, i] = (f(x + e) - fx) / h
        else:
            J[:, i] = (f(x + e) - f(x - e)) / (2 * h)
    return J


def power_iteration_norm(J: np.ndarray, max_iter: int = POWER_MAX_ITER, tol: float = POWER_TOL,
                         seed: int = 0) -> tuple[float, np.ndarray]:
    """Spectral norm of ``J`` by power iteration on ``J^T J``; returns ``(sigma, right vector)``."""
    J = np.asarray(J, dtype=float)
    M = J.T @ J
    v = np.random.default_rng(seed).standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, v
        v = w / nw
        if abs(nw - prev) <= tol * nw:
            prev = nw
            break
        prev = nw
    return float(np.sqrt(v @ M @ v)), v


@dataclass
class ContractionReport:
    lambda_bound: float
    lambda_est: float
    satisfied: bool
    bound_satisfied: bool
    jacobian: np.ndarray | None = field(default=None, repr=False)

    def summary(self) -> str:
        return (
            f"lambda_bound={self.lambda_bound!r}\nlambda_est={self.lambda_est!r}\n"
            f"satisfied={self.satisfied}\nbound_satisfied={self.bound_satisfied}"
        )


def estimate_contraction(econ: Economy, config: TatonnementConfig, state: EconomyState,
                         h: float = FD_STEP) -> ContractionReport:
    """Measured ``||D Phi||`` at ``state`` next to the sufficient bound."""
    J = jacobian(econ, config, state, h)
    est, _ = power_iteration_norm(J)
    alpha = min(max(config.alpha, np.nextafter(0.0, 1.0)), np.nextafter(1.0, 0.0))
    bound = contraction_bound(alpha, config.gamma_A, econ.paths.depth, config.tau)
    return ContractionReport(bound, max(est, 0.0), est < 1.0, bound < 1.0, J)


# ----------------------------------------------------------------- Pareto


@dataclass
class ParetoReport:
    dominated: bool
    witness_policy: np.ndarray | None
    witness_allocation: np.ndarray | None
    grid_step: float
    points_scanned: int
    feasible_points: int = 0


def policy_grid(n_paths: int, step: float) -> np.ndarray:
    """All points of the simplex with coordinates in multiples of ``step``."""
    m = round(1.0 / step)
    if abs(m * step - 1.0) > 1e-9:
        raise ParameterError(f"grid step {step} does not divide 1")
    rows = []
    for cuts in itertools.combinations(range(m + n_paths - 1), n_paths - 1):
        parts = np.diff((-1,) + cuts + (m + n_paths - 1,)) - 1
        rows.append(parts)
    return np.array(rows, dtype=float) / m


def pareto_check(state: EconomyState, econ: Economy, grid_step: float = 0.05) -> ParetoReport:
    """Search the policy grid for an allocation that Pareto-dominates ``state``.

    Every alternative ``pi'`` must satisfy the SLO set and the budget at ``p*``;
    its supplies are ``d(pi')`` projected into the sets. Welfare and every firm
    revenue, all valued at ``p*``, must weakly improve with one strict gain.
    """
    nP = econ.n_paths
    if nP > PARETO_MAX_PATHS:
        raise GridInfeasibleError(f"{nP} paths exceed the grid-search cap of {PARETO_MAX_PATHS}")
    if not (PARETO_MIN_STEP - 1e-12 <= grid_step <= PARETO_MAX_STEP + 1e-12):
        raise ParameterError(f"grid step must lie in [{PARETO_MIN_STEP}, {PARETO_MAX_STEP}], got {grid_step}")
    grid = policy_grid(nP, grid_step)
    p = state.p
    w_star = welfare(state.pi, econ.welfare)
    rev_star = np.sum(p * state.y, axis=1)
    income = float(econ.profits(p).sum())
    feasible = 0
    for pi in grid:
        if not slo_feasible(pi, econ.welfare).feasible:
            continue
        d = econ.demand(pi)
        if float(np.sum(p * d)) > income + WEAK_SLACK:
            continue
        feasible += 1
        y = econ.project(d)
        dw = welfare(pi, econ.welfare) - w_star
        drev = np.sum(p * y, axis=1) - rev_star
        if dw < -WEAK_SLACK or np.any(drev < -WEAK_SLACK):
            continue
        if dw > STRICT_MARGIN or np.any(drev > STRICT_MARGIN):
            return ParetoReport(True, pi, y, grid_step, len(grid), feasible)
    return ParetoReport(False, None, None, grid_step, len(grid), feasible)


def write_pareto_csv(report: ParetoReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("dominated", "grid_step", "points_scanned", "feasible_points", "witness_policy"))
        wit = "" if report.witness_policy is None else " ".join(repr(float(v)) for v in report.witness_policy)
        w.writerow((int(report.dominated), repr(float(report.grid_step)), report.points_scanned,
                    report.feasible_points, wit))


# ------------------------------------------------------- supporting prices


@dataclass
class SupportReport:
    prices: np.ndarray  # (A, K), each row a unit outward normal
    certified: bool
    max_violation: float
    samples: int


def supporting_prices(y, econ_or_sets, n_samples: int = 10_000, seed: int = 0,
                      tol: float = CERT_TOL) -> SupportReport:
    """Per-agent prices at which the boundary allocation ``y`` maximizes profit.

    ``econ_or_sets`` is an :class:`Economy` or a sequence of production sets.
    The certificate evaluates the profit inequality on sampled set points
    (interior and boundary) and on the closed-form support value.
    """
    sets = econ_or_sets.sets if isinstance(econ_or_sets, Economy) else tuple(econ_or_sets)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape[0] != len(sets):
        raise ParameterError(f"allocation has {y.shape[0]} rows for {len(sets)} sets")
    rng = np.random.default_rng(seed)
    prices = np.zeros_like(y)
    worst = -np.inf
    for a, s in enumerate(sets):
        resid = float(np.linalg.norm(s.project(y[a]) - y[a]))
        if resid > tol:
            raise ParameterError(f"agent {a}: allocation lies outside its set (residual {resid:.2e})")
        nrm = s.supporting_normal(y[a])
        if nrm is None:
            raise NotSupportableError(f"agent {a}: allocation is interior to its set; no nonzero supporting price")
        prices[a] = nrm
        half = n_samples // 2
        pts = np.vstack([s.sample(n_samples - half, rng), s.sample(half, rng, boundary=True)])
        own = float(nrm @ y[a])
        worst = max(worst, float(np.max(pts @ nrm)) - own, s.support(nrm) - own)
    return SupportReport(prices, bool(worst <= tol), worst, n_samples)


# ------------------------------------------------------------ Bewley sweep


@dataclass
class SweepReport:
    K_list: list[int]
    converged: list[bool]
    iterations: list[int]
    gap_y: list[float]
    gap_p: list[float]
    gap_pi: list[float]
    gaps: list[float]
    states: list[EconomyState] = field(default_factory=list, repr=False)

    @property
    def last_le_first(self) -> bool:
        g = self._usable()
        return len(g) < 2 or g[-1] <= g[0]

    @property
    def tail_monotone(self) -> bool:
        """Nonincreasing gaps over the final half of the usable gap list."""
        g = self._usable()
        tail = g[len(g) // 2:] if len(g) > 1 else g
        return all(b <= a for a, b in zip(tail, tail[1:]))

    def _usable(self) -> list[float]:
        ok = [self.converged[j] and self.converged[j + 1] for j in range(len(self.gaps))]
        return [g for g, keep in zip(self.gaps, ok) if keep]


def _h_distance(c_small, econ_small: Economy, c_big, econ_big: Economy) -> float:
    """``sqrt(sum_a ||f_a - g_a||_H^2)`` between per-agent coordinate rows of two bases."""
    total = 0.0
    for a in range(c_small.shape[0]):
        f = sfsl_reconstruct(c_small[a], econ_small.basis).values
        g = sfsl_reconstruct(c_big[a], econ_big.basis).values
        total += float(np.sum(((f - g) ** 2) @ econ_big.basis.grid.weights))
    return math.sqrt(total)


def bewley_sweep(factory: Callable[[int], tuple[Economy, TatonnementConfig, EconomyState | None]],
                 K_list: Sequence[int]) -> SweepReport:
    """Solve the nested economies ``factory(K)`` and report Cauchy gaps between neighbours.

    ``factory`` returns ``(economy, config, init)``; ``init`` may be ``None``.
    Gaps are measured in H after reconstructing each solution's trajectories,
    which for nested families equals comparing zero-padded coordinates.
    """
    K_list = [int(k) for k in K_list]
    if any(b <= a for a, b in zip(K_list, K_list[1:])):
        raise ParameterError(f"K list must be strictly increasing, got {K_list}")
    econs, states, conv, iters = [], [], [], []
    for K in K_list:
        econ, config, init = factory(K)
        rep = solve(econ, config, init, record_trace=False, n_samples=10)
        econs.append(econ)
        states.append(rep.state)
        conv.append(rep.converged)
        iters.append(rep.iterations)
    gy, gp, gpi, gaps = [], [], [], []
    for j in range(len(K_list) - 1):
        e0, e1, s0, s1 = econs[j], econs[j + 1], states[j], states[j + 1]
        dy = _h_distance(s0.y, e0, s1.y, e1)
        dp = _h_distance(s0.p, e0, s1.p, e1)
        dpi = float(np.linalg.norm(s0.pi - s1.pi)) if s0.pi.shape == s1.pi.shape else float("nan")
        gy.append(dy)
        gp.append(dp)
        gpi.append(dpi)
        gaps.append(math.sqrt(dy * dy + dp * dp + dpi * dpi))
    return SweepReport(K_list, conv, iters, gy, gp, gpi, gaps, states)


def write_sweep_csv(report: SweepReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("K_from", "K_to", "converged", "gap_y", "gap_p", "gap_pi", "gap"))
        for j, g in enumerate(report.gaps):
            ok = report.converged[j] and report.converged[j + 1]
            w.writerow((report.K_list[j], report.K_list[j + 1], int(ok), repr(report.gap_y[j]),
                        repr(report.gap_p[j]), repr(report.gap_pi[j]), repr(g)))
