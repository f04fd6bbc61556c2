"""Seeded random economies for fuzzing, sweeps and the acceptance suite.

Workloads are always drawn inside the production sets (and ``0`` is in every
set), so any demand ``d(pi)`` is a convex combination of in-set points and the
market can clear.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .consumer import SloParams, WelfareSpec
from .dag import Dag, WorkloadProfile, enumerate_paths
from .equilibrium import Economy
from .production import Ball, Box, Hull
from .trajectory import TimeGrid, build_sfsl_basis, dyadic_decay_rates

__all__ = ["diamond_dag", "chain_dag", "layered_dag", "random_dag", "random_set", "random_economy"]


def diamond_dag() -> Dag:
    """s -> {a, b} -> t."""
    return Dag(4, ((0, 1), (0, 2), (1, 3), (2, 3)), names=("s", "a", "b", "t"))


def chain_dag(n: int) -> Dag:
    return Dag(n, tuple((i, i + 1) for i in range(n - 1)))


def layered_dag(widths: Sequence[int]) -> Dag:
    """Complete bipartite links between consecutive layers."""
    layers, start = [], 0
    for w in widths:
        layers.append(list(range(start, start + w)))
        start += w
    edges = [(u, v) for a, b in zip(layers, layers[1:]) for u in a for v in b]
    return Dag(start, tuple(edges))


def random_dag(n: int, rng: np.random.Generator, density: float = 0.3) -> Dag:
    """Random DAG on ``n`` nodes (edges only go forward in index order)."""
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < density]
    return Dag(n, tuple(edges))


def random_set(kind: str, K: int, rng: np.random.Generator, scale: float = 1.0):
    """A random set containing 0 whose nonnegative orthant part is non-trivial."""
    if kind == "ball":
        c = rng.uniform(-0.2, 0.2, K) * scale
        return Ball(c, scale * rng.uniform(0.8, 1.2) + np.linalg.norm(c))
    if kind == "box":
        return Box(-scale * rng.uniform(0.2, 1.0, K), scale * rng.uniform(0.5, 1.5, K))
    if kind == "hull":
        m = int(rng.integers(2, 5))
        pos = scale * rng.uniform(0.0, 1.0, (m, K))
        return Hull(np.vstack([pos, -0.3 * pos.sum(axis=0, keepdims=True)]))
    raise ValueError(f"unknown set kind {kind!r}")


def _inside_nonneg(s, rng: np.random.Generator, shrink: float) -> np.ndarray:
    K = s.dim
    if isinstance(s, Ball):
        # nonneg point of the ball centered at 0 of radius r - |c| (contained in s)
        r = s.radius - np.linalg.norm(s.center)
        v = np.abs(rng.standard_normal(K))
        return shrink * r * rng.uniform(0.3, 1.0) * v / np.linalg.norm(v)
    if isinstance(s, Box):
        return shrink * rng.uniform(0.1, 1.0, K) * s.upper
    w = rng.dirichlet(np.ones(len(s.generators) - 1))
    return shrink * rng.uniform(0.3, 1.0) * (w @ s.generators[:-1])


def random_economy(
    seed: int,
    dag: Dag | None = None,
    R: int = 2,
    F: int = 2,
    set_kinds: Sequence[str] = ("ball", "box", "hull"),
    shrink: float = 0.6,
    mechanism: str = "B",
    grid: TimeGrid | None = None,
    slo_weights: tuple[float, float] = (1.0, 1.0),
    penalty_scale: float = 0.5,
) -> Economy:
    rng = np.random.default_rng(seed)
    dag = dag or diamond_dag()
    grid = grid or TimeGrid(1.0, 101)
    basis = build_sfsl_basis(R, F, dyadic_decay_rates(F, 0.05), grid)
    K = basis.K
    sets = [random_set(set_kinds[int(rng.integers(len(set_kinds)))], K, rng) for _ in range(dag.n_nodes)]
    paths = enumerate_paths(dag)
    inc = paths.incidence()
    units = np.zeros(inc.shape + (K,))
    for a, q in zip(*np.nonzero(inc)):
        units[a, q] = _inside_nonneg(sets[a], rng, shrink)
    n = len(paths)
    slo = SloParams(
        slo_weights[0], slo_weights[1],
        lat=rng.uniform(0.0, 1.0, n) * penalty_scale,
        qual=rng.uniform(0.0, 1.0, n) * penalty_scale,
        cost=rng.uniform(0.0, 1.0, n) * penalty_scale,
    )
    spec = WelfareSpec(rng.uniform(0.0, 1.0, n) * penalty_scale, slo)
    return Economy(basis, tuple(sets), dag, paths, WorkloadProfile(units, inc), spec, mechanism=mechanism)
