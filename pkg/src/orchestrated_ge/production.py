"""Agent production sets in V_K coordinates.

Three concrete families (ball, convex hull, box) each give exact projection,
support-function and supply oracles. Coordinates are orthonormal, so the
Euclidean norm on them is the H-norm.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionError, ParameterError

__all__ = [
    "Ball",
    "Hull",
    "Box",
    "ProductionSet",
    "AxiomReport",
    "project_onto_set",
    "profit",
    "supply",
    "check_axioms",
    "min_norm_point",
]

_TOL = 1e-8


def _vec(x, name: str) -> np.ndarray:
    a = np.array(x, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise DimensionError(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(a)):
        raise ParameterError(f"{name} must be finite")
    a.setflags(write=False)
    return a


def _check_dim(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim:
        raise DimensionError(f"expected last dimension {dim}, got {x.shape}")
    return x


def min_norm_point(Q: np.ndarray, tol: float = 1e-14, max_iter: int = 1000) -> np.ndarray:
    """Convex weights ``w`` minimizing ``||w @ Q||`` (Wolfe's active-set method)."""
    Q = np.asarray(Q, dtype=float)
    m = len(Q)
    sq = np.einsum("ij,ij->i", Q, Q)
    scale = max(1.0, float(sq.max()))
    j0 = int(np.argmin(sq))
    S = [j0]
    wS = np.array([1.0])
    x = Q[j0].copy()
    for _ in range(max_iter):
        dots = Q @ x
        j = int(np.argmin(dots))
        if x @ x - dots[j] <= tol * scale or j in S:
            break
        S.append(j)
        wS = np.append(wS, 0.0)
        while True:
            QS = Q[S]
            n = len(S)
            kkt = np.zeros((n + 1, n + 1))
            kkt[:n, :n] = QS @ QS.T
            kkt[:n, n] = kkt[n, :n] = 1.0
            rhs = np.zeros(n + 1)
            rhs[n] = 1.0
            v = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:n]
            if np.all(v > 1e-15):
                wS = v
                break
            neg = np.flatnonzero(v <= 1e-15)
            ratios = wS[neg] / np.maximum(wS[neg] - v[neg], 1e-300)
            k = int(np.argmin(ratios))
            theta = min(max(ratios[k], 0.0), 1.0)
            wS = wS + theta * (v - wS)
            wS[neg[k]] = 0.0
            keep = wS > 1e-15
            S = [s for s, kp in zip(S, keep) if kp]
            wS = wS[keep] / wS[keep].sum()
        x = wS @ Q[S]
    w = np.zeros(m)
    w[S] = wS
    return w


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed Euclidean ball ``{y : ||y - center|| <= radius}``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center, "center"))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ParameterError(f"radius must be positive and finite, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.size

    def project(self, y) -> np.ndarray:
        y = _check_dim(y, self.dim)
        diff = y - self.center
        n = np.linalg.norm(diff, axis=-1, keepdims=True)
        factor = np.where(n > self.radius, self.radius / np.where(n > 0, n, 1.0), 1.0)
        return self.center + diff * factor

    def support(self, p) -> float:
        p = _check_dim(p, self.dim)
        return float(p @ self.center + self.radius * np.linalg.norm(p))

    def supply(self, p) -> np.ndarray:
        p = _check_dim(p, self.dim)
        m = np.max(np.abs(p))
        if m == 0.0:
            return self.center.copy()
        u = p / m  # rescale first so tiny prices do not underflow in the norm
        return self.center + self.radius * u / np.linalg.norm(u)

    def contains_zero(self) -> bool:
        return bool(np.linalg.norm(self.center) <= self.radius)

    def enclosing_radius(self) -> float:
        return float(np.linalg.norm(self.center) + self.radius)

    def sample(self, n: int, rng: np.random.Generator, boundary: bool = False) -> np.ndarray:
        d = rng.standard_normal((n, self.dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = self.radius if boundary else self.radius * rng.random((n, 1)) ** (1.0 / self.dim)
        return self.center + r * d

    def supporting_normal(self, y, tol: float = _TOL):
        diff = _check_dim(y, self.dim) - self.center
        n = np.linalg.norm(diff)
        if abs(n - self.radius) > tol:
            return None
        return diff / n


@dataclass(frozen=True, eq=False)
class Hull:
    """Convex hull of finitely many generators (rows of ``generators``)."""

    generators: np.ndarray

    def __post_init__(self):
        g = np.array(self.generators, dtype=float)
        if g.ndim != 2 or g.shape[0] < 1 or g.shape[1] < 1:
            raise DimensionError("generators must be a non-empty (m, K) array")
        if not np.all(np.isfinite(g)):
            raise ParameterError("generators must be finite")
        g.setflags(write=False)
        object.__setattr__(self, "generators", g)

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    def weights(self, y) -> np.ndarray:
        y = _check_dim(y, self.dim)
        return min_norm_point(self.generators - y)

    def project(self, y) -> np.ndarray:
        y = _check_dim(y, self.dim)
        if y.ndim == 2:
            return np.array([self.project(row) for row in y])
        return self.weights(y) @ self.generators

    def support(self, p) -> float:
        p = _check_dim(p, self.dim)
        return float(np.max(self.generators @ p))

    def supply(self, p) -> np.ndarray:
        p = _check_dim(p, self.dim)
        # argmax returns the lowest index on ties; p = 0 gives generator 0
        return self.generators[int(np.argmax(self.generators @ p))].copy()

    def contains_zero(self) -> bool:
        m = len(self.generators)
        res = linprog(
            np.zeros(m),
            A_eq=np.vstack([self.generators.T, np.ones((1, m))]),
            b_eq=np.append(np.zeros(self.dim), 1.0),
            bounds=[(0, None)] * m,
            method="highs",
        )
        return res.status == 0

    def enclosing_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.generators, axis=1)))

    def sample(self, n: int, rng: np.random.Generator, boundary: bool = False) -> np.ndarray:
        m = len(self.generators)
        w = rng.dirichlet(np.full(m, 0.5), size=n)
        if boundary and m > 1:
            # zero one weight per sample to land on a facet of the simplex
            w[np.arange(n), rng.integers(0, m, n)] = 0.0
            w /= w.sum(axis=1, keepdims=True)
        return w @ self.generators

    def supporting_normal(self, y, tol: float = _TOL):
        y = _check_dim(y, self.dim)
        G = self.generators
        diffs = G - y
        # a hull of lower affine dimension is supported by any normal to its affine span
        _, s, vt = np.linalg.svd(diffs - diffs.mean(axis=0), full_matrices=True)
        rank = int(np.sum(s > 1e-10 * max(1.0, s.max() if s.size else 1.0)))
        if rank < self.dim and np.max(np.abs(diffs @ vt[-1])) <= tol:
            return vt[-1] / np.linalg.norm(vt[-1])
        centroid = G.mean(axis=0)
        res = linprog(
            -(y - centroid),
            A_ub=diffs,
            b_ub=np.zeros(len(G)),
            bounds=[(-1.0, 1.0)] * self.dim,
            method="highs",
        )
        if res.status != 0 or -res.fun <= tol:
            return None
        return res.x / np.linalg.norm(res.x)


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``lower <= y <= upper``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lower, "lower"), _vec(self.upper, "upper")
        if lo.shape != hi.shape:
            raise DimensionError("lower and upper must have the same length")
        if np.any(lo > hi):
            raise ParameterError("lower must not exceed upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def project(self, y) -> np.ndarray:
        return np.clip(_check_dim(y, self.dim), self.lower, self.upper)

    def support(self, p) -> float:
        p = _check_dim(p, self.dim)
        return float(np.sum(np.where(p > 0, p * self.upper, p * self.lower)))

    def supply(self, p) -> np.ndarray:
        p = _check_dim(p, self.dim)
        tie = np.clip(0.0, self.lower, self.upper)
        return np.where(p > 0, self.upper, np.where(p < 0, self.lower, tie))

    def contains_zero(self) -> bool:
        return bool(np.all(self.lower <= 0) and np.all(self.upper >= 0))

    def enclosing_radius(self) -> float:
        return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))

    def sample(self, n: int, rng: np.random.Generator, boundary: bool = False) -> np.ndarray:
        pts = self.lower + (self.upper - self.lower) * rng.random((n, self.dim))
        if boundary:
            k = rng.integers(0, self.dim, n)
            side = rng.random(n) < 0.5
            pts[np.arange(n), k] = np.where(side, self.upper[k], self.lower[k])
        return pts

    def supporting_normal(self, y, tol: float = _TOL):
        y = _check_dim(y, self.dim)
        # lowest-index active face wins
        for k in range(self.dim):
            for bound, sign in ((self.upper[k], 1.0), (self.lower[k], -1.0)):
                if abs(y[k] - bound) <= tol:
                    e = np.zeros(self.dim)
                    e[k] = sign
                    return e
        return None


ProductionSet = Union[Ball, Hull, Box]


def project_onto_set(y, prod_set: ProductionSet) -> np.ndarray:
    """Nearest point of ``prod_set`` to ``y``."""
    return prod_set.project(y)


def profit(p, prod_set: ProductionSet) -> float:
    """Support function ``sup_{y in Y} <p, y>``."""
    return prod_set.support(p)


def supply(p, prod_set: ProductionSet) -> np.ndarray:
    """One maximizer of ``<p, y>`` over the set, with deterministic tie-breaking."""
    return prod_set.supply(p)


@dataclass
class AxiomReport:
    contains_zero: bool
    enclosing_radius: float
    bounded: bool
    convex: bool
    max_midpoint_residual: float
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_axioms(prod_set: ProductionSet, trials: int = 100, seed: int = 0) -> AxiomReport:
    """Spot-check closedness/convexity, boundedness and inaction. Never raises on a violation."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    violations = []
    try:
        zero_ok = prod_set.contains_zero()
    except Exception as exc:  # solver failure counts as a violation
        zero_ok = False
        violations.append(f"inaction check failed: {exc}")
    if not zero_ok:
        violations.append("Y3: 0 is not in the set")
    radius = prod_set.enclosing_radius()
    bounded = bool(np.isfinite(radius))
    if not bounded:
        violations.append("Y2: set is unbounded")

    rng = np.random.default_rng(seed)
    a = prod_set.sample(trials, rng)
    b = prod_set.sample(trials, rng)
    mid = 0.5 * (a + b)
    resid = float(np.max(np.linalg.norm(prod_set.project(mid) - mid, axis=-1)))
    convex = resid <= _TOL
    if not convex:
        violations.append(f"Y1: midpoint residual {resid:.3e} exceeds {_TOL:.0e}")
    return AxiomReport(zero_ok, radius, bounded, convex, resid, violations)
