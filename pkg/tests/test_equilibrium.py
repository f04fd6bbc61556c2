import numpy as np
import pytest
from hypothesis import given, strategies as st

from orchestrated_ge.consumer import SloParams, WelfareSpec, budget_residual
from orchestrated_ge.dag import Dag, WorkloadProfile, enumerate_paths
from orchestrated_ge.equilibrium import (
    Economy,
    EconomyState,
    TatonnementConfig,
    default_state,
    excess_demand,
    phi_step,
    project_simplex,
    read_state_csv,
    solve,
    state_violations,
    verify_equilibrium,
    walras_residual,
    write_state_csv,
    write_trace_csv,
)
from orchestrated_ge.errors import ParameterError
from orchestrated_ge.production import Ball, Box
from orchestrated_ge.synthetic import random_economy
from orchestrated_ge.trajectory import TimeGrid, build_sfsl_basis


def random_state(econ, rng):
    y = econ.project(rng.standard_normal((econ.A, econ.K)))
    p = rng.dirichlet(np.ones(econ.A * econ.K)).reshape(econ.A, econ.K)
    return EconomyState(y, p, rng.dirichlet(np.ones(econ.n_paths)))


def single_agent(set_, u, mechanism="A"):
    basis = build_sfsl_basis(1, 2, [0.1, 0.2], TimeGrid(1.0, 51))
    dag = Dag(1)
    paths = enumerate_paths(dag)
    w = WorkloadProfile(np.asarray(u, dtype=float).reshape(1, 1, 2), paths.incidence())
    spec = WelfareSpec(np.zeros(1), SloParams(1, 1, np.zeros(1), np.zeros(1), np.zeros(1)))
    return Economy(basis, (set_,), dag, paths, w, spec, mechanism=mechanism)


def test_project_simplex():
    np.testing.assert_allclose(project_simplex([0.2, 0.3, 0.5]), [0.2, 0.3, 0.5])
    np.testing.assert_allclose(project_simplex([2.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(project_simplex([0.0, 0.0]), [0.5, 0.5])
    x = project_simplex(np.random.default_rng(0).standard_normal(10))
    assert np.all(x >= 0) and abs(x.sum() - 1) < 1e-12


def test_excess_demand_examples():
    econ = random_economy(1)
    raw = TatonnementConfig(demand_mode="raw")
    rng = np.random.default_rng(0)
    s = random_state(econ, rng)
    cleared = EconomyState(econ.demand(s.pi), s.p, s.pi)
    assert np.all(excess_demand(cleared, econ, raw) == 0)
    point = EconomyState(s.y, s.p, np.eye(econ.n_paths)[0])
    z = excess_demand(point, econ, raw)
    on = econ.workload.incidence[:, 0]
    np.testing.assert_allclose(z[on], econ.workload.units[on, 0] - s.y[on])
    np.testing.assert_allclose(z[~on], -s.y[~on])
    sat = excess_demand(s, econ, TatonnementConfig())
    d = econ.demand(s.pi)
    mu = econ.profits(s.p).sum() / np.sum(s.p * d)
    np.testing.assert_allclose(sat + s.y, mu * d, rtol=1e-12)


def test_walras_saturated_is_price_universal():
    cfg = TatonnementConfig()
    for seed in range(5):
        econ = random_economy(seed)
        rng = np.random.default_rng(seed)
        for _ in range(20):
            assert abs(walras_residual(random_state(econ, rng), econ, cfg)) <= 1e-10


def test_walras_independent_expansion():
    econ = random_economy(3)
    s = random_state(econ, np.random.default_rng(3))
    d = econ.demand(s.pi)
    prof = econ.profits(s.p)
    mu = prof.sum() / np.sum(s.p * d)
    sigma = econ.supplies(s.p)
    manual = sum(mu * (s.p[a] @ d[a]) - s.p[a] @ sigma[a] for a in range(econ.A))
    assert abs(manual - walras_residual(s, econ, TatonnementConfig())) <= 1e-12


def test_walras_raw_mode():
    econ = random_economy(2)
    cfg = TatonnementConfig(demand_mode="raw")
    s = random_state(econ, np.random.default_rng(2))
    prof = econ.profits(s.p)
    expect = budget_residual(s.p, econ.demand(s.pi), prof)
    assert walras_residual(s, econ, cfg) == pytest.approx(expect, abs=1e-14)
    zero = econ.replace(workload=WorkloadProfile(np.zeros_like(econ.workload.units), econ.workload.incidence))
    assert walras_residual(s, zero, cfg) == pytest.approx(-prof.sum(), abs=1e-14)
    cleared = EconomyState(econ.demand(s.pi), s.p, s.pi)
    assert walras_residual(cleared, econ, cfg, at_supply=False) == 0.0


def test_fixed_point_is_fixed(reference):
    _, econ, config, rep = reference
    nxt = phi_step(rep.state, econ, config)
    assert np.linalg.norm(nxt.vector() - rep.state.vector()) <= 1e-9


def test_full_step_lands_on_demand():
    econ = random_economy(4, set_kinds=("ball", "box"))
    econ = econ.replace(sets=tuple(Ball(np.zeros(econ.K), 2.0) if isinstance(s, Ball) else s for s in econ.sets))
    s = random_state(econ, np.random.default_rng(4))
    out = phi_step(s, econ, TatonnementConfig(alpha=1.0))
    np.testing.assert_array_equal(out.y, econ.demand(s.pi))


def test_single_agent_single_path():
    box = Box(np.array([-0.5, -0.5]), np.array([0.6, 0.4]))
    econ = single_agent(box, [0.6, 0.4])
    rep = solve(econ, TatonnementConfig(alpha=0.5, tol=1e-12))
    assert rep.converged and rep.state.pi.tolist() == [1.0]
    np.testing.assert_allclose(rep.state.y, econ.supplies(rep.state.p), atol=1e-9)


def test_contraction_regime_solve(regime_solutions):
    for econ, config, rep in regime_solutions:
        assert rep.converged
        assert rep.residuals.e3 <= 1e-6


def test_different_initial_states_agree(regime_solutions):
    econ, config, rep = regime_solutions[0]
    other = solve(econ, config, random_state(econ, np.random.default_rng(99)), record_trace=False)
    assert np.linalg.norm(other.state.vector() - rep.state.vector()) <= 1e-6


def test_low_temperature_stays_in_state_space():
    econ = random_economy(6)
    cfg = TatonnementConfig(alpha=0.1, gamma_A=0.5, tau=0.05, max_iter=300, tol=1e-14)
    rep = solve(econ, cfg, keep_history=True, record_trace=False)
    for x in rep.history[::10]:
        assert state_violations(EconomyState.from_vector(x, econ.A, econ.K), econ) == []


def test_verify_detects_perturbations(reference):
    _, econ, config, rep = reference
    s = rep.state
    y = s.y.copy()
    y[1, 0] += 0.1
    assert verify_equilibrium(EconomyState(y, s.p, s.pi), econ, config).e3 >= 0.09
    # all mass on the more penalized path is beaten by sampled policies
    worse = EconomyState(s.y, s.p, np.array([0.0, 1.0]))
    r = verify_equilibrium(worse, econ, config)
    assert r.e2 > 0 and r.e2_witness is not None


@given(st.integers(0, 10_000))
def test_map_preserves_state_space(seed):
    econ = random_economy(seed % 7, mechanism="AB"[seed % 2])
    cfg = TatonnementConfig(demand_mode=("raw", "saturated")[seed % 3 == 0])
    s = random_state(econ, np.random.default_rng(seed))
    assert state_violations(phi_step(s, econ, cfg), econ) == []


def test_uniform_reset_when_prices_vanish(caplog):
    econ = random_economy(0, mechanism="A")
    s = default_state(econ)
    cfg = TatonnementConfig(beta=1e6, demand_mode="raw")
    # huge negative excess demand on every coordinate wipes out max(0, .)
    big = EconomyState(econ.project(np.full((econ.A, econ.K), 5.0)), s.p, np.eye(econ.n_paths)[0])
    econ0 = econ.replace(workload=WorkloadProfile(np.zeros_like(econ.workload.units), econ.workload.incidence))
    out = phi_step(big, econ0, cfg)
    if np.all(econ0.project(big.y) > 0):
        np.testing.assert_allclose(out.p, np.full_like(out.p, 1 / out.p.size))
    assert state_violations(out, econ0) == []


def test_determinism_and_trace(tmp_path, reference):
    _, econ, config, rep = reference
    again = solve(econ, config)
    assert again.trace == rep.trace
    write_trace_csv(rep, tmp_path / "a.csv")
    write_trace_csv(again, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    head = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert head == "iter,step_norm,walras_residual,e1,e2,e3,welfare,budget_residual,mu"


def test_banach_bound_reported(reference):
    _, econ, config, _ = reference
    rep = solve(econ, config, lam=0.99, record_trace=False)
    assert rep.banach_ok is True


def test_state_csv_round_trip(tmp_path, reference):
    _, econ, _, rep = reference
    write_state_csv(rep.state, tmp_path / "s.csv")
    back = read_state_csv(tmp_path / "s.csv", econ.A, econ.K, econ.n_paths)
    assert np.array_equal(back.vector(), rep.state.vector())
    (tmp_path / "bad.csv").write_text("block,agent,index,value\ny,0,0,1.0\n")
    with pytest.raises(ParameterError):
        read_state_csv(tmp_path / "bad.csv", econ.A, econ.K, econ.n_paths)


def test_config_validation():
    with pytest.raises(ParameterError):
        TatonnementConfig(alpha=1.5)
    with pytest.raises(ParameterError):
        TatonnementConfig(tau=0.0)
    with pytest.raises(ParameterError):
        TatonnementConfig(demand_mode="exact")
