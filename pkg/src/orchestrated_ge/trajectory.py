"""Discretized commodity space ``L2([0, T], R^R)`` and the exponential-kernel subspace V_K.

Trajectories are sampled on a uniform grid and integrated with trapezoidal
weights, so every inner product is a weighted sum over channels and samples.
The subspace V_K is spanned by ``exp(-t / theta_j)`` on each channel,
orthonormalized with two-pass modified Gram-Schmidt.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateFamilyError, DimensionError, IllConditionedBasisError, ParameterError

__all__ = [
    "TimeGrid",
    "Trajectory",
    "SfslBasis",
    "inner_product",
    "norm",
    "build_sfsl_basis",
    "dyadic_decay_rates",
    "sfsl_forward",
    "sfsl_reconstruct",
    "project_VK",
    "embed_coordinates",
]

CONDITION_LIMIT = 1e12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Uniform grid on ``[0, T]`` with trapezoidal quadrature weights."""

    horizon: float
    samples: int

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ParameterError(f"horizon must be positive, got {self.horizon}")
        if int(self.samples) != self.samples or self.samples < 2:
            raise ParameterError(f"need at least 2 samples, got {self.samples}")

    @cached_property
    def times(self) -> np.ndarray:
        return _frozen(np.linspace(0.0, self.horizon, int(self.samples)))

    @cached_property
    def weights(self) -> np.ndarray:
        h = self.horizon / (self.samples - 1)
        w = np.full(int(self.samples), h)
        w[0] = w[-1] = 0.5 * h
        return _frozen(w)

    def same_as(self, other: "TimeGrid") -> bool:
        return self is other or (self.horizon == other.horizon and self.samples == other.samples)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """R metric channels sampled on a shared grid; ``values`` has shape ``(R, N_t)``."""

    values: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[1] != self.grid.samples or v.shape[0] < 1:
            raise DimensionError(f"values of shape {v.shape} do not fit a grid of {self.grid.samples} samples")
        if not np.all(np.isfinite(v)):
            raise ParameterError("trajectory values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @classmethod
    def zeros(cls, grid: TimeGrid, channels: int = 1) -> "Trajectory":
        return cls(np.zeros((channels, grid.samples)), grid)

    @classmethod
    def from_functions(cls, grid: TimeGrid, fns: Sequence[Callable[[np.ndarray], np.ndarray]]) -> "Trajectory":
        t = grid.times
        return cls(np.vstack([np.broadcast_to(f(t), t.shape) for f in fns]), grid)

    def _check(self, other: "Trajectory"):
        if not self.grid.same_as(other.grid) or self.channels != other.channels:
            raise DimensionError("trajectories live on different grids or channel counts")

    def __add__(self, other: "Trajectory") -> "Trajectory":
        self._check(other)
        return Trajectory(self.values + other.values, self.grid)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        self._check(other)
        return Trajectory(self.values - other.values, self.grid)

    def __mul__(self, scalar: float) -> "Trajectory":
        return Trajectory(self.values * float(scalar), self.grid)

    __rmul__ = __mul__


def inner_product(f: Trajectory, g: Trajectory) -> float:
    """Weighted sum ``sum_r sum_t w_t f_r(t) g_r(t)``."""
    f._check(g)
    return float(np.sum((f.values * g.values) @ f.grid.weights))


def norm(f: Trajectory) -> float:
    return float(np.sqrt(max(inner_product(f, f), 0.0)))


def dyadic_decay_rates(count: int, theta_min: float = 0.01) -> np.ndarray:
    """Nested family ``theta_min * 2**j``; the family for F is a prefix of the one for 2F."""
    if count < 1:
        raise ParameterError("need at least one decay rate")
    return theta_min * 2.0 ** np.arange(count)


@dataclass(frozen=True, eq=False)
class SfslBasis:
    """Orthonormal basis of V_K, ordered by (channel, theta).

    ``matrix`` has shape ``(K, R, N_t)``; row ``r * F + j`` is supported on
    channel ``r`` only.
    """

    R: int
    F: int
    decay_rates: np.ndarray
    grid: TimeGrid
    matrix: np.ndarray
    gram_check: np.ndarray

    @property
    def K(self) -> int:
        return self.R * self.F

    @property
    def basis(self) -> list[Trajectory]:
        return [Trajectory(row, self.grid) for row in self.matrix]

    @cached_property
    def _analysis(self) -> np.ndarray:
        # coeffs = _analysis @ y.ravel()
        return _frozen((self.matrix * self.grid.weights).reshape(self.K, -1))

    def vector(self, k: int) -> Trajectory:
        return Trajectory(self.matrix[k], self.grid)


def _weighted_dot(u: np.ndarray, v: np.ndarray, w: np.ndarray) -> float:
    return float(np.dot(u * w, v))


def build_sfsl_basis(R: int, F: int, decay_rates: Sequence[float], grid: TimeGrid) -> SfslBasis:
    """Orthonormalize ``exp(-t / theta_j)`` on every channel.

    Raises
    ------
    DegenerateFamilyError
        Repeated decay rates.
    IllConditionedBasisError
        Column-normalized Gram condition number above 1e12.
    """
    if R < 1 or F < 1:
        raise ParameterError(f"need R >= 1 and F >= 1, got R={R}, F={F}")
    theta = np.asarray(decay_rates, dtype=float)
    if theta.shape != (F,):
        raise DimensionError(f"expected {F} decay rates, got {theta.size}")
    if np.any(~np.isfinite(theta)) or np.any(theta <= 0):
        raise ParameterError("decay rates must be positive and finite")
    if len(np.unique(theta)) < F:
        raise DegenerateFamilyError(f"duplicate decay rates in {theta.tolist()}")
    if np.any(np.diff(theta) <= 0):
        raise ParameterError("decay rates must be strictly increasing")

    t, w = grid.times, grid.weights
    raw = np.exp(-t[None, :] / theta[:, None])  # (F, N_t)
    gram = (raw * w) @ raw.T
    d = np.sqrt(np.diag(gram))
    cond = np.linalg.cond(gram / np.outer(d, d))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise IllConditionedBasisError(f"Gram condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}")

    q = np.zeros_like(raw)
    for j in range(F):
        v = raw[j].copy()
        for _ in range(2):
            for i in range(j):
                v -= _weighted_dot(q[i], v, w) * q[i]
        nv = np.sqrt(_weighted_dot(v, v, w))
        if nv <= 1e-14 * np.sqrt(gram[j, j]):
            raise IllConditionedBasisError(f"kernel theta={theta[j]} is numerically dependent on its predecessors")
        q[j] = v / nv

    mat = np.zeros((R * F, R, grid.samples))
    for r in range(R):
        mat[r * F:(r + 1) * F, r, :] = q
    flat = mat.reshape(R * F, -1)
    check = (flat * np.tile(w, R)) @ flat.T
    return SfslBasis(R=R, F=F, decay_rates=_frozen(theta), grid=grid, matrix=_frozen(mat), gram_check=_frozen(check))


def _check_fit(y: Trajectory, basis: SfslBasis):
    if not y.grid.same_as(basis.grid) or y.channels != basis.R:
        raise DimensionError(
            f"trajectory ({y.channels} channels, {y.grid.samples} samples) does not match basis "
            f"({basis.R} channels, {basis.grid.samples} samples)"
        )


def sfsl_forward(y: Trajectory, basis: SfslBasis) -> np.ndarray:
    """Coordinates ``<phi_k, y>`` of ``y`` in the orthonormal basis."""
    _check_fit(y, basis)
    return basis._analysis @ y.values.ravel()


def sfsl_reconstruct(c, basis: SfslBasis) -> Trajectory:
    c = np.asarray(c, dtype=float)
    if c.shape != (basis.K,):
        raise DimensionError(f"expected {basis.K} coordinates, got shape {c.shape}")
    return Trajectory(np.tensordot(c, basis.matrix, axes=1), basis.grid)


def project_VK(y: Trajectory, basis: SfslBasis) -> Trajectory:
    return sfsl_reconstruct(sfsl_forward(y, basis), basis)


def embed_coordinates(c, source: SfslBasis, target: SfslBasis) -> np.ndarray:
    """Re-express coordinates from ``source`` in ``target`` by orthogonal projection.

    For nested dyadic families this equals per-channel zero padding.
    """
    return sfsl_forward(sfsl_reconstruct(c, source), target)
