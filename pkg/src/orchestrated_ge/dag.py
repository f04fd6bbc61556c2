"""Agent DAG, path enumeration, demand operator and soft Bellman routing."""
from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import softmax

from .errors import DimensionError, NotADagError, ParameterError, PathCapExceededError

__all__ = [
    "Dag",
    "PathSet",
    "WorkloadProfile",
    "enumerate_paths",
    "demand",
    "bellman_values",
    "optimal_path_value",
    "softmax_routing",
]

DEFAULT_PATH_CAP = 10_000


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph on agents ``0..n_nodes-1``.

    Sources and sinks default to nodes without in- or out-edges.
    """

    n_nodes: int
    edges: tuple[tuple[int, int], ...] = ()
    sources: tuple[int, ...] | None = None
    sinks: tuple[int, ...] | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ParameterError("a DAG needs at least one node")
        edges = tuple(sorted({(int(u), int(v)) for u, v in self.edges}))
        for u, v in edges:
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ParameterError(f"edge ({u}, {v}) references an unknown node")
        object.__setattr__(self, "edges", edges)
        indeg = {v for _, v in edges}
        outdeg = {u for u, _ in edges}
        if self.sources is None:
            object.__setattr__(self, "sources", tuple(i for i in range(self.n_nodes) if i not in indeg))
        if self.sinks is None:
            object.__setattr__(self, "sinks", tuple(i for i in range(self.n_nodes) if i not in outdeg))
        if self.names is None:
            object.__setattr__(self, "names", tuple(str(i) for i in range(self.n_nodes)))

    def successors(self, u: int) -> list[int]:
        return [v for a, v in self.edges if a == u]

    def topological_order(self) -> list[int]:
        ts = graphlib.TopologicalSorter({v: set() for v in range(self.n_nodes)})
        for u, v in self.edges:
            ts.add(v, u)
        try:
            return list(ts.static_order())
        except graphlib.CycleError as exc:
            raise NotADagError(f"cycle detected: {exc.args[1]}") from None


@dataclass(frozen=True)
class PathSet:
    """Source-to-sink paths in lexicographic order of node indices."""

    paths: tuple[tuple[int, ...], ...]
    n_nodes: int

    def __len__(self) -> int:
        return len(self.paths)

    @property
    def depth(self) -> int:
        return max(len(p) for p in self.paths)

    def index(self, path: Sequence[int]) -> int:
        return self.paths.index(tuple(path))

    def incidence(self) -> np.ndarray:
        """Boolean ``(A, |P|)`` matrix: agent ``a`` lies on path ``q``."""
        inc = np.zeros((self.n_nodes, len(self.paths)), dtype=bool)
        for q, path in enumerate(self.paths):
            inc[list(path), q] = True
        return inc


def enumerate_paths(dag: Dag, cap: int = DEFAULT_PATH_CAP) -> PathSet:
    """All source-to-sink paths; raises if the count would exceed ``cap``."""
    dag.topological_order()
    sinks = set(dag.sinks)
    succ = {u: dag.successors(u) for u in range(dag.n_nodes)}
    found: list[tuple[int, ...]] = []
    stack = [(s,) for s in sorted(dag.sources, reverse=True)]
    while stack:
        path = stack.pop()
        u = path[-1]
        if u in sinks:
            found.append(path)
            if len(found) > cap:
                raise PathCapExceededError(f"more than {cap} source-to-sink paths")
        for v in sorted(succ[u], reverse=True):
            stack.append(path + (v,))
    if not found:
        raise ParameterError("the DAG has no source-to-sink path")
    paths = tuple(sorted(set(found)))
    covered = set().union(*map(set, paths))
    missing = sorted(set(range(dag.n_nodes)) - covered)
    if missing:
        raise ParameterError(f"nodes {missing} lie on no source-to-sink path")
    return PathSet(paths, dag.n_nodes)


@dataclass(frozen=True, eq=False)
class WorkloadProfile:
    """Unit workloads ``u[a, q]`` in V_K coordinates, zero off the incidence pattern."""

    units: np.ndarray  # (A, |P|, K)
    incidence: np.ndarray = field(repr=False)  # (A, |P|) bool

    def __post_init__(self):
        u = np.array(self.units, dtype=float)
        inc = np.asarray(self.incidence, dtype=bool)
        if u.ndim != 3 or u.shape[:2] != inc.shape:
            raise DimensionError(f"workload shape {u.shape} does not match incidence {inc.shape}")
        if np.any(u[~inc] != 0):
            raise ParameterError("workload defined for an agent that is not on the path")
        u.setflags(write=False)
        object.__setattr__(self, "units", u)
        object.__setattr__(self, "incidence", inc)

    @classmethod
    def unit_default(cls, paths: PathSet, K: int, scale: float = 1.0) -> "WorkloadProfile":
        """``scale * e_1`` for every incident (agent, path) pair."""
        inc = paths.incidence()
        u = np.zeros(inc.shape + (K,))
        u[inc, 0] = scale
        return cls(u, inc)


def demand(policy, workload: WorkloadProfile, paths: PathSet) -> np.ndarray:
    """``d_a = sum_{q contains a} pi(q) u[a, q]`` for every agent; shape ``(A, K)``."""
    pi = np.asarray(policy, dtype=float)
    if pi.shape != (len(paths),):
        raise DimensionError(f"policy has {pi.size} weights for {len(paths)} paths")
    return np.einsum("q,aqk->ak", pi, workload.units)


def _suffix_values(s: np.ndarray, dag: Dag) -> dict[int, dict[tuple[int, ...], float]]:
    sinks = set(dag.sinks)
    table: dict[int, dict[tuple[int, ...], float]] = {}
    for u in reversed(dag.topological_order()):
        entries = {(u,): float(s[u])} if u in sinks else {}
        for v in dag.successors(u):
            for suffix, val in table[v].items():
                entries[(u,) + suffix] = float(s[u]) + val
        table[u] = entries
    return table


def bellman_values(revenues, dag: Dag, paths: PathSet, check: bool = True) -> np.ndarray:
    """Per-path value ``sum_{a in q} s_a``.

    Computed by a suffix DP over the graph; with ``check`` the result is compared
    against direct summation along each enumerated path.
    """
    s = np.asarray(revenues, dtype=float)
    if s.shape != (dag.n_nodes,):
        raise DimensionError(f"expected {dag.n_nodes} revenues, got {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ParameterError("revenues must be finite")
    table = _suffix_values(s, dag)
    values = np.array([table[q[0]][q] for q in paths.paths])
    if check:
        direct = np.array([s[list(q)].sum() for q in paths.paths])
        tol = 1e-12 * max(1.0, float(np.abs(s).sum()))
        if np.max(np.abs(values - direct), initial=0.0) > tol:
            raise AssertionError("Bellman DP disagrees with path enumeration")
    return values


def optimal_path_value(revenues, dag: Dag) -> float:
    """Classic node DP ``V(u) = s_u + max_v V(v)``, maximized over sources."""
    s = np.asarray(revenues, dtype=float)
    sinks = set(dag.sinks)
    best: dict[int, float] = {}
    for u in reversed(dag.topological_order()):
        tails = [best[v] for v in dag.successors(u) if v in best]
        if u in sinks:
            tails.append(0.0)
        if tails:
            best[u] = float(s[u]) + max(tails)
    return max(best[u] for u in dag.sources if u in best)


def softmax_routing(values, tau: float) -> np.ndarray:
    """``pi(q) proportional to exp(-V_q / tau)``."""
    if not (tau > 0):
        raise ParameterError(f"temperature must be positive, got {tau}")
    pi = softmax(-np.asarray(values, dtype=float) / tau)
    # large spreads underflow to exact zeros; keep the output in the open simplex
    pi = np.maximum(pi, np.finfo(float).tiny)
    return pi / pi.sum()
