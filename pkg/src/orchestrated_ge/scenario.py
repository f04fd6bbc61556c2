"""Scenario files: a YAML (or JSON) tree describing one economy plus run settings.

Top-level keys::

    schema        "oge-scenario/1" (required)
    name, seed
    grid          {horizon, samples}
    basis         {channels, families, decay_rates | theta_min}
    agents        list of {name, set: {kind: ball|box|hull, ...}}
    dag           {edges: [[from, to], ...], sources, sinks}
    workload      {scale, units: [{agent, path, coords | leading | trajectory}]}
    consumer      {lambda1, lambda2, L_max, Q_min, C_max, epsilon, lat, qual, cost, reg}
    tatonnement   {alpha, beta, tau, gamma_A, demand_mode, tol, max_iter,
                   mechanism, penalty_shaping, init_prices}
    shocks        {sigma, distribution, seed, horizon}
    impulse       {scale, horizon}
    taylor        {lambda1_star, lambda2_star, phi_lat, phi_qual, lat_target, qual_target, steps}
    sweep         {k_list}
    pareto        {grid_step}

Set parameters (``center``, ``lower``, ``upper``) may be scalars, which are
broadcast to every coordinate, so one file can describe a whole K-sweep.
Per-path lists follow the lexicographic path order; a mapping keyed by
``"s>a>t"`` node-name chains is accepted as well. Validation collects every
problem as a ``(field_path, message)`` pair.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .consumer import SloParams, WelfareSpec
from .dag import Dag, PathSet, WorkloadProfile, enumerate_paths
from .dsge import ShockSpec, TaylorRule
from .equilibrium import Economy, EconomyState, TatonnementConfig, default_state
from .errors import OrchestratedGEError, ScenarioError
from .production import Ball, Box, Hull
from .trajectory import SfslBasis, TimeGrid, Trajectory, build_sfsl_basis, dyadic_decay_rates, sfsl_forward

__all__ = ["Scenario", "SCHEMA", "BUILTIN", "load_scenario", "parse_scenario", "builtin_path"]

log = logging.getLogger(__name__)

SCHEMA = "oge-scenario/1"
BUILTIN = ("paper-6.3", "walras-fuzz", "bewley-nested", "bewley-v1", "taylor-two-path")

_FIELDS = {
    "": {"schema", "name", "seed", "grid", "basis", "agents", "dag", "workload", "consumer",
         "tatonnement", "shocks", "impulse", "taylor", "sweep", "pareto"},
    "grid": {"horizon", "samples"},
    "basis": {"channels", "families", "decay_rates", "theta_min"},
    "agent": {"name", "set"},
    "set.ball": {"kind", "center", "radius"},
    "set.box": {"kind", "lower", "upper"},
    "set.hull": {"kind", "generators"},
    "dag": {"edges", "sources", "sinks"},
    "workload": {"scale", "units"},
    "unit": {"agent", "path", "coords", "leading", "trajectory"},
    "consumer": {"lambda1", "lambda2", "L_max", "Q_min", "C_max", "epsilon", "lat", "qual", "cost", "reg"},
    "tatonnement": {"alpha", "beta", "tau", "gamma_A", "demand_mode", "tol", "max_iter", "mechanism",
                    "penalty_shaping", "init_prices"},
    "shocks": {"sigma", "distribution", "seed", "horizon"},
    "impulse": {"scale", "horizon"},
    "taylor": {"lambda1_star", "lambda2_star", "phi_lat", "phi_qual", "lat_target", "qual_target", "steps"},
    "sweep": {"k_list"},
    "pareto": {"grid_step"},
}


class _Issues:
    def __init__(self):
        self.items: list[tuple[str, str]] = []

    def add(self, path: str, msg: str):
        self.items.append((path or "<root>", msg))

    def raise_if_any(self):
        if self.items:
            raise ScenarioError(self.items)


def _join(path: str, key) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else str(key)


def _mapping(node, path: str, kind: str, issues: _Issues) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        issues.add(path, "expected a mapping")
        return {}
    for key in node:
        if key not in _FIELDS[kind]:
            issues.add(_join(path, key), "unknown field")
    return node


def _number(node: dict, key: str, path: str, issues: _Issues, default=None, *, integer=False,
            positive=False, nonneg=False, allow_inf=False):
    if key not in node or node[key] is None:
        return default
    v = node[key]
    fp = _join(path, key)
    if isinstance(v, str) and allow_inf and v.strip().lower() in ("inf", "+inf", "-inf", ".inf", "-.inf"):
        return float(v.replace(".", ""))
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        issues.add(fp, f"expected a number, got {v!r}")
        return default
    if integer and int(v) != v:
        issues.add(fp, f"expected an integer, got {v!r}")
        return default
    v = int(v) if integer else float(v)
    if not allow_inf and not np.isfinite(v):
        issues.add(fp, "must be finite")
        return default
    if positive and not v > 0:
        issues.add(fp, f"must be positive, got {v!r}")
        return default
    if nonneg and v < 0:
        issues.add(fp, f"must be nonnegative, got {v!r}")
        return default
    return v


def _array(v, fp: str, issues: _Issues, ndim: int | None = None):
    try:
        a = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        issues.add(fp, "expected a numeric array")
        return None
    if ndim is not None and a.ndim != ndim:
        issues.add(fp, f"expected {ndim}-dimensional array, got shape {a.shape}")
        return None
    if not np.all(np.isfinite(a)):
        issues.add(fp, "array entries must be finite")
        return None
    return a


def _choice(node: dict, key: str, path: str, options, issues: _Issues, default):
    v = node.get(key, default)
    if v not in options:
        issues.add(_join(path, key), f"must be one of {sorted(options)}, got {v!r}")
        return default
    return v


@dataclass
class Scenario:
    """Validated scenario tree; economies are built on demand so K can vary."""

    raw: dict
    source: str = "<memory>"

    # ------------------------------------------------------------ accessors
    @property
    def name(self) -> str:
        return str(self.raw.get("name", Path(self.source).stem))

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    def section(self, key: str) -> dict:
        return self.raw.get(key) or {}

    @property
    def channels(self) -> int:
        return int(self.section("basis").get("channels", 1))

    @property
    def families(self) -> int:
        return int(self.section("basis").get("families", 1))

    @property
    def K(self) -> int:
        return self.channels * self.families

    @property
    def agent_names(self) -> list[str]:
        return [str(a.get("name", i)) if isinstance(a, dict) else str(i)
                for i, a in enumerate(self.raw.get("agents") or [])]

    # -------------------------------------------------------------- builders
    def grid(self) -> TimeGrid:
        g = self.section("grid")
        return TimeGrid(float(g.get("horizon", 1.0)), int(g.get("samples", 101)))

    def basis(self, families: int | None = None) -> SfslBasis:
        b = self.section("basis")
        F = self.families if families is None else int(families)
        if "decay_rates" in b:
            rates = np.asarray(b["decay_rates"], dtype=float)
            if families is not None and F != rates.size:
                rates = dyadic_decay_rates(F, float(rates[0]))
        else:
            rates = dyadic_decay_rates(F, float(b.get("theta_min", 0.01)))
        return build_sfsl_basis(self.channels, F, rates, self.grid())

    def dag(self) -> Dag:
        names = self.agent_names
        index = {n: i for i, n in enumerate(names)}
        d = self.section("dag")

        def ref(v):
            return index[str(v)] if str(v) in index else int(v)

        edges = tuple((ref(u), ref(v)) for u, v in d.get("edges", []))
        src = tuple(ref(v) for v in d["sources"]) if "sources" in d else None
        snk = tuple(ref(v) for v in d["sinks"]) if "sinks" in d else None
        return Dag(len(names), edges, src, snk, tuple(names))

    def _path_key(self, path: tuple[int, ...]) -> str:
        names = self.agent_names
        return ">".join(names[i] for i in path)

    def _per_path(self, value, paths: PathSet, default: float) -> np.ndarray:
        if value is None:
            return np.full(len(paths), default)
        if isinstance(value, dict):
            return np.array([float(value[self._path_key(q)]) for q in paths.paths])
        a = np.asarray(value, dtype=float)
        return np.full(len(paths), float(a)) if a.ndim == 0 else a

    def _vector(self, v, K: int) -> np.ndarray:
        a = np.asarray(v, dtype=float)
        return np.full(K, float(a)) if a.ndim == 0 else a

    def sets(self, K: int):
        out = []
        for spec in (a.get("set") or {"kind": "ball"} for a in self.raw.get("agents") or []):
            kind = spec.get("kind", "ball")
            if kind == "ball":
                out.append(Ball(self._vector(spec.get("center", 0.0), K), float(spec.get("radius", 1.0))))
            elif kind == "box":
                out.append(Box(self._vector(spec.get("lower", -1.0), K), self._vector(spec.get("upper", 1.0), K)))
            else:
                out.append(Hull(np.asarray(spec["generators"], dtype=float)))
        return out

    def workload(self, basis: SfslBasis, paths: PathSet) -> WorkloadProfile:
        w = self.section("workload")
        K = basis.K
        inc = paths.incidence()
        names = self.agent_names
        explicit = w.get("units")
        if explicit is None:
            return WorkloadProfile.unit_default(paths, K, float(w.get("scale", 0.5)))
        u = np.zeros(inc.shape + (K,))
        for entry in explicit:
            a = names.index(str(entry["agent"])) if str(entry["agent"]) in names else int(entry["agent"])
            pkey = entry["path"]
            chain = pkey.split(">") if isinstance(pkey, str) else [str(x) for x in pkey]
            q = paths.index(tuple(names.index(c) if c in names else int(c) for c in chain))
            if "coords" in entry:
                u[a, q] = np.asarray(entry["coords"], dtype=float)
            elif "leading" in entry:
                u[a, q, 0] = float(entry["leading"])
            else:
                u[a, q] = sfsl_forward(_trajectory(entry["trajectory"], basis), basis)
        return WorkloadProfile(u, inc)

    def welfare(self, paths: PathSet) -> WelfareSpec:
        c = self.section("consumer")
        inf = float("inf")
        slo = SloParams(
            float(c.get("lambda1", 1.0)), float(c.get("lambda2", 1.0)),
            lat=self._per_path(c.get("lat"), paths, 0.0),
            qual=self._per_path(c.get("qual"), paths, 0.0),
            cost=self._per_path(c.get("cost"), paths, 0.0),
            L_max=_as_float(c.get("L_max", inf)), Q_min=_as_float(c.get("Q_min", -inf)),
            C_max=_as_float(c.get("C_max", inf)),
        )
        return WelfareSpec(self._per_path(c.get("reg"), paths, 0.0), slo, float(c.get("epsilon", 0.0)))

    def economy(self, families: int | None = None, mechanism: str | None = None) -> Economy:
        basis = self.basis(families)
        dag = self.dag()
        paths = enumerate_paths(dag)
        t = self.section("tatonnement")
        return Economy(
            basis, tuple(self.sets(basis.K)), dag, paths, self.workload(basis, paths), self.welfare(paths),
            mechanism=mechanism or t.get("mechanism", "B"),
            penalty_shaping=bool(t.get("penalty_shaping", True)),
        )

    def config(self, seed: int | None = None, demand_mode: str | None = None) -> TatonnementConfig:
        t = dict(self.section("tatonnement"))
        for k in ("mechanism", "penalty_shaping", "init_prices"):
            t.pop(k, None)
        if demand_mode is not None:
            t["demand_mode"] = demand_mode
        t["seed"] = self.seed if seed is None else int(seed)
        if "max_iter" in t:
            t["max_iter"] = int(t["max_iter"])
        return TatonnementConfig(**t)

    def initial_state(self, econ: Economy) -> EconomyState:
        s = default_state(econ)
        if self.section("tatonnement").get("init_prices", "uniform") == "leading":
            p = np.zeros((econ.A, econ.K))
            p[:, 0] = 1.0 / econ.A
            s = EconomyState(s.y, p, s.pi)
        return s

    def shocks(self) -> ShockSpec:
        s = self.section("shocks")
        return ShockSpec(s.get("sigma", 0.01), s.get("distribution", "gaussian"),
                         int(s.get("seed", self.seed)), int(s.get("horizon", 200)))

    def taylor(self) -> tuple[TaylorRule, int]:
        t = dict(self.section("taylor"))
        steps = int(t.pop("steps", 5))
        c = self.section("consumer")
        t.setdefault("lambda1_star", float(c.get("lambda1", 1.0)))
        t.setdefault("lambda2_star", float(c.get("lambda2", 1.0)))
        return TaylorRule(**{k: float(v) for k, v in t.items()}), steps

    def k_list(self) -> list[int]:
        return [int(k) for k in self.section("sweep").get("k_list", [self.K])]

    def sweep_factory(self, seed: int | None = None, demand_mode: str | None = None, mechanism: str | None = None):
        """``K -> (economy, config, init)`` for the nested sweep; ``K`` must be a multiple of the channel count."""
        R = self.channels

        def build(K: int):
            if K % R:
                raise ScenarioError([("sweep.k_list", f"K={K} is not a multiple of {R} channels")])
            econ = self.economy(K // R, mechanism)
            return econ, self.config(seed, demand_mode), self.initial_state(econ)

        return build


def _as_float(v) -> float:
    return float(str(v).replace(".inf", "inf")) if isinstance(v, str) else float(v)


def _trajectory(spec, basis: SfslBasis) -> Trajectory:
    """Per channel: a list of ``{amp, decay}`` exponential terms (``decay: null`` is constant)."""
    t = basis.grid.times
    rows = []
    for terms in spec:
        row = np.zeros_like(t)
        for term in terms:
            decay = term.get("decay")
            row = row + float(term.get("amp", 1.0)) * (np.ones_like(t) if decay is None else np.exp(-t / float(decay)))
        rows.append(row)
    return Trajectory(np.array(rows), basis.grid)


# ------------------------------------------------------------- validation


def _validate(raw: Any, issues: _Issues) -> None:
    if not isinstance(raw, dict):
        issues.add("", "scenario must be a mapping at the top level")
        return
    _mapping(raw, "", "", issues)
    if raw.get("schema") != SCHEMA:
        issues.add("schema", f"missing or unsupported schema tag (expected {SCHEMA!r})")
    _number(raw, "seed", "", issues, integer=True)

    g = _mapping(raw.get("grid"), "grid", "grid", issues)
    _number(g, "horizon", "grid", issues, positive=True)
    samples = _number(g, "samples", "grid", issues, integer=True)
    if samples is not None and samples < 2:
        issues.add("grid.samples", "need at least 2 samples")

    b = _mapping(raw.get("basis"), "basis", "basis", issues)
    R = _number(b, "channels", "basis", issues, 1, integer=True, positive=True)
    F = _number(b, "families", "basis", issues, 1, integer=True, positive=True)
    _number(b, "theta_min", "basis", issues, positive=True)
    if "decay_rates" in b:
        rates = _array(b["decay_rates"], "basis.decay_rates", issues, ndim=1)
        if rates is not None and F is not None and rates.size != F:
            issues.add("basis.decay_rates", f"expected {F} decay rates, got {rates.size}")
    K = (R or 1) * (F or 1)

    agents = raw.get("agents")
    names: list[str] = []
    if not isinstance(agents, list) or not agents:
        issues.add("agents", "need a non-empty list of agents")
        agents = []
    for i, a in enumerate(agents):
        ap = _join("agents", i)
        a = _mapping(a, ap, "agent", issues)
        name = str(a.get("name", i))
        if name in names:
            issues.add(_join(ap, "name"), f"duplicate agent name {name!r}")
        names.append(name)
        _validate_set(a.get("set"), _join(ap, "set"), K, issues)

    d = _mapping(raw.get("dag"), "dag", "dag", issues)
    for i, e in enumerate(d.get("edges", []) or []):
        ep = _join("dag.edges", i)
        if not isinstance(e, (list, tuple)) or len(e) != 2:
            issues.add(ep, "an edge is a [from, to] pair")
            continue
        for end in e:
            if not _resolves(end, names):
                issues.add(ep, f"edge references unknown node {end!r}")
    for key in ("sources", "sinks"):
        for v in d.get(key, []) or []:
            if not _resolves(v, names):
                issues.add(_join("dag", key), f"unknown node {v!r}")

    w = _mapping(raw.get("workload"), "workload", "workload", issues)
    _number(w, "scale", "workload", issues)
    for i, u in enumerate(w.get("units", []) or []):
        up = _join("workload.units", i)
        u = _mapping(u, up, "unit", issues)
        if not _resolves(u.get("agent"), names):
            issues.add(_join(up, "agent"), f"unknown agent {u.get('agent')!r}")
        chain = u.get("path")
        chain = chain.split(">") if isinstance(chain, str) else chain
        if not isinstance(chain, list) or not all(_resolves(c, names) for c in chain):
            issues.add(_join(up, "path"), f"path {u.get('path')!r} references unknown nodes")
        forms = [k for k in ("coords", "leading", "trajectory") if k in u]
        if len(forms) != 1:
            issues.add(up, "give exactly one of coords, leading, trajectory")
        elif forms[0] == "coords":
            c = _array(u["coords"], _join(up, "coords"), issues, ndim=1)
            if c is not None and c.size != K:
                issues.add(_join(up, "coords"), f"expected {K} coordinates, got {c.size}")
        elif forms[0] == "leading":
            _number(u, "leading", up, issues)
        elif not isinstance(u["trajectory"], list) or (R is not None and len(u["trajectory"]) != R):
            issues.add(_join(up, "trajectory"), f"expected one term list per channel ({R})")

    c = _mapping(raw.get("consumer"), "consumer", "consumer", issues)
    for k in ("lambda1", "lambda2"):
        _number(c, k, "consumer", issues, positive=True)
    for k in ("L_max", "Q_min", "C_max"):
        _number(c, k, "consumer", issues, allow_inf=True)
    _number(c, "epsilon", "consumer", issues, nonneg=True)

    t = _mapping(raw.get("tatonnement"), "tatonnement", "tatonnement", issues)
    alpha = _number(t, "alpha", "tatonnement", issues)
    if alpha is not None and not 0 <= alpha <= 1:
        issues.add("tatonnement.alpha", f"must lie in [0, 1], got {alpha}")
    _number(t, "beta", "tatonnement", issues, nonneg=True)
    _number(t, "tau", "tatonnement", issues, positive=True)
    _number(t, "gamma_A", "tatonnement", issues, nonneg=True)
    _number(t, "tol", "tatonnement", issues, positive=True)
    _number(t, "max_iter", "tatonnement", issues, integer=True, positive=True)
    _choice(t, "demand_mode", "tatonnement", {"raw", "saturated"}, issues, "saturated")
    _choice(t, "mechanism", "tatonnement", {"A", "B"}, issues, "B")
    _choice(t, "init_prices", "tatonnement", {"uniform", "leading"}, issues, "uniform")
    _choice(t, "penalty_shaping", "tatonnement", {True, False}, issues, True)

    s = _mapping(raw.get("shocks"), "shocks", "shocks", issues)
    _number(s, "horizon", "shocks", issues, integer=True, positive=True)
    _number(s, "seed", "shocks", issues, integer=True)
    _choice(s, "distribution", "shocks", {"gaussian", "uniform"}, issues, "gaussian")
    if "sigma" in s:
        sig = _array(s["sigma"], "shocks.sigma", issues)
        if sig is not None and np.any(sig < 0):
            issues.add("shocks.sigma", "must be nonnegative")

    im = _mapping(raw.get("impulse"), "impulse", "impulse", issues)
    _number(im, "scale", "impulse", issues)
    _number(im, "horizon", "impulse", issues, integer=True, positive=True)

    ty = _mapping(raw.get("taylor"), "taylor", "taylor", issues)
    for k in ("lambda1_star", "lambda2_star"):
        _number(ty, k, "taylor", issues, positive=True)
    for k in ("phi_lat", "phi_qual"):
        _number(ty, k, "taylor", issues, nonneg=True)
    for k in ("lat_target", "qual_target"):
        _number(ty, k, "taylor", issues)
    _number(ty, "steps", "taylor", issues, integer=True, positive=True)

    sw = _mapping(raw.get("sweep"), "sweep", "sweep", issues)
    if "k_list" in sw:
        ks = sw["k_list"]
        if not isinstance(ks, list) or not ks or not all(isinstance(k, int) and k > 0 for k in ks):
            issues.add("sweep.k_list", "expected a non-empty list of positive integers")
        elif R and any(k % R for k in ks):
            issues.add("sweep.k_list", f"every K must be a multiple of the {R} channels")
        elif any(b_ <= a_ for a_, b_ in zip(ks, ks[1:])):
            issues.add("sweep.k_list", "must be strictly increasing")

    pa = _mapping(raw.get("pareto"), "pareto", "pareto", issues)
    _number(pa, "grid_step", "pareto", issues, positive=True)


def _resolves(v, names: list[str]) -> bool:
    if str(v) in names:
        return True
    return isinstance(v, int) and not isinstance(v, bool) and 0 <= v < len(names)


def _validate_set(spec, path: str, K: int, issues: _Issues):
    if spec is None:
        return
    if not isinstance(spec, dict):
        issues.add(path, "expected a mapping")
        return
    kind = spec.get("kind", "ball")
    if kind not in ("ball", "box", "hull"):
        issues.add(_join(path, "kind"), f"unknown set kind {kind!r}")
        return
    _mapping(spec, path, f"set.{kind}", issues)
    if kind == "ball":
        _number(spec, "radius", path, issues, positive=True)
        if "center" in spec:
            c = _array(spec["center"], _join(path, "center"), issues)
            if c is not None and c.ndim == 1 and c.size != K:
                issues.add(_join(path, "center"), f"expected {K} coordinates, got {c.size}")
    elif kind == "box":
        lo = _array(spec.get("lower", -1.0), _join(path, "lower"), issues)
        hi = _array(spec.get("upper", 1.0), _join(path, "upper"), issues)
        for name, a in (("lower", lo), ("upper", hi)):
            if a is not None and a.ndim == 1 and a.size != K:
                issues.add(_join(path, name), f"expected {K} coordinates, got {a.size}")
        if lo is not None and hi is not None and lo.shape in ((), (K,)) and hi.shape in ((), (K,)):
            if np.any(np.broadcast_to(lo, (K,)) > np.broadcast_to(hi, (K,))):
                issues.add(path, "lower exceeds upper")
            elif np.any(np.broadcast_to(lo, (K,)) > 0) or np.any(np.broadcast_to(hi, (K,)) < 0):
                issues.add(path, "box must contain 0 (inaction)")
    else:
        g = _array(spec.get("generators"), _join(path, "generators"), issues, ndim=2)
        if g is not None and g.shape[1] != K:
            issues.add(_join(path, "generators"), f"generators must have {K} columns, got {g.shape[1]}")


def _check_built(sc: Scenario, issues: _Issues) -> None:
    """Second pass: build the pieces and map module errors onto field paths."""
    try:
        sc.basis()
    except OrchestratedGEError as exc:
        issues.add("basis.decay_rates" if "decay_rates" in sc.section("basis") else "basis",
                   f"{exc.code}: {exc}")
        return
    try:
        dag = sc.dag()
        paths = enumerate_paths(dag)
    except OrchestratedGEError as exc:
        issues.add("dag", f"{exc.code}: {exc}")
        return
    c = sc.section("consumer")
    for key in ("lat", "qual", "cost", "reg"):
        v = c.get(key)
        fp = _join("consumer", key)
        if isinstance(v, dict):
            missing = [sc._path_key(q) for q in paths.paths if sc._path_key(q) not in v]
            extra = sorted(set(v) - {sc._path_key(q) for q in paths.paths})
            if missing:
                issues.add(fp, f"no value for paths {missing}")
            if extra:
                issues.add(fp, f"unknown paths {extra}")
        elif v is not None:
            a = _array(v, fp, issues)
            if a is not None and a.ndim == 1 and a.size != len(paths):
                issues.add(fp, f"expected {len(paths)} per-path values, got {a.size}")
            if key == "reg" and a is not None and np.any(a < 0):
                issues.add(fp, "must be nonnegative")
    names = sc.agent_names
    for i, u in enumerate(sc.section("workload").get("units", []) or []):
        chain = u["path"].split(">") if isinstance(u["path"], str) else [str(x) for x in u["path"]]
        idx = tuple(names.index(x) if x in names else int(x) for x in chain)
        a = names.index(str(u["agent"])) if str(u["agent"]) in names else int(u["agent"])
        if idx not in paths.paths:
            issues.add(_join(_join("workload.units", i), "path"), f"{'>'.join(chain)} is not a source-to-sink path")
        elif a not in idx:
            issues.add(_join(_join("workload.units", i), "agent"), "agent is not on the path")
    if issues.items:
        return
    try:
        econ = sc.economy()
        sc.config()
    except OrchestratedGEError as exc:
        issues.add("", f"{exc.code}: {exc}")
        return
    for a, s in enumerate(econ.sets):
        if not s.contains_zero():
            issues.add(_join(_join("agents", a), "set"), "production set must contain 0 (inaction)")
    u = econ.workload.units
    for a, q in zip(*np.nonzero(econ.workload.incidence)):
        gap = float(np.linalg.norm(econ.sets[a].project(u[a, q]) - u[a, q]))
        if gap > 1e-9:
            log.warning("workload of agent %s on path %s lies %.2e outside its set; the market cannot clear exactly",
                        names[a], sc._path_key(econ.paths.paths[q]), gap)


def parse_scenario(raw: Any, source: str = "<memory>") -> Scenario:
    issues = _Issues()
    _validate(raw, issues)
    issues.raise_if_any()
    sc = Scenario(copy.deepcopy(raw), source)
    _check_built(sc, issues)
    issues.raise_if_any()
    return sc


def builtin_path(name: str):
    return resources.files("orchestrated_ge").joinpath("scenarios").joinpath(f"{name}.yaml")


def load_scenario(path) -> Scenario:
    """Load a scenario file, or a built-in scenario by name."""
    p = str(path)
    if p in BUILTIN and not Path(p).exists():
        text = builtin_path(p).read_text(encoding="utf-8")
        source = p
    else:
        try:
            text = Path(p).read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioError([("<file>", f"cannot read {p}: {exc.strerror}")]) from None
        source = p
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "<file>"
        raise ScenarioError([(where, f"parse error: {getattr(exc, 'problem', exc)}")]) from None
    return parse_scenario(raw, source)
