import copy
import logging

import numpy as np
import pytest
import yaml

from orchestrated_ge.equilibrium import solve
from orchestrated_ge.errors import ScenarioError
from orchestrated_ge.scenario import BUILTIN, load_scenario, parse_scenario

MINIMAL = {
    "schema": "oge-scenario/1",
    "agents": [{"name": "solo", "set": {"kind": "ball", "center": 0.0, "radius": 1.0}}],
}


def _issues(raw):
    with pytest.raises(ScenarioError) as ei:
        parse_scenario(raw)
    return ei.value.issues


def _paths(issues):
    return [p for p, _ in issues]


def test_minimal_scenario_uses_defaults():
    sc = parse_scenario(copy.deepcopy(MINIMAL))
    econ = sc.economy()
    assert sc.K == 1 and econ.A == 1 and econ.n_paths == 1
    cfg = sc.config()
    assert econ.mechanism == "B" and cfg.demand_mode == "saturated"
    rep = solve(econ, cfg, sc.initial_state(econ))
    assert rep.converged


@pytest.mark.parametrize("name", BUILTIN)
def test_builtins_load_and_build(name):
    sc = load_scenario(name)
    econ = sc.economy()
    assert econ.K == sc.K
    assert len(econ.sets) == len(sc.agent_names)


def test_duplicate_decay_rates_map_to_field():
    raw = copy.deepcopy(MINIMAL)
    raw["basis"] = {"channels": 1, "families": 2, "decay_rates": [0.5, 0.5]}
    issues = _issues(raw)
    assert "basis.decay_rates" in _paths(issues)
    assert any("ill-conditioned-basis" in m for _, m in issues)


def test_wrong_number_of_decay_rates():
    raw = copy.deepcopy(MINIMAL)
    raw["basis"] = {"channels": 1, "families": 3, "decay_rates": [0.5, 1.0]}
    assert "basis.decay_rates" in _paths(_issues(raw))


def test_unknown_edge_node_is_cross_reference_error():
    raw = load_scenario("paper-6.3").raw
    raw["dag"]["edges"].append(["a", "nowhere"])
    issues = _issues(raw)
    assert any(p.startswith("dag.edges") and "nowhere" in m for p, m in issues)


def test_unknown_workload_agent():
    raw = load_scenario("taylor-two-path").raw
    raw["workload"]["units"][0]["agent"] = "ghost"
    assert "workload.units[0].agent" in _paths(_issues(raw))


def test_agent_not_on_path():
    raw = load_scenario("taylor-two-path").raw
    raw["workload"]["units"][0]["agent"] = "careful"  # unit 0 sits on the fast path
    assert "workload.units[0].agent" in _paths(_issues(raw))


def test_per_path_length_mismatch():
    raw = load_scenario("taylor-two-path").raw
    raw["consumer"]["cost"] = [0.1, 0.2, 0.3]
    assert "consumer.cost" in _paths(_issues(raw))


def test_unknown_fields_are_errors():
    raw = copy.deepcopy(MINIMAL)
    raw["colour"] = "red"
    raw["tatonnement"] = {"alpah": 0.1}
    paths = _paths(_issues(raw))
    assert "colour" in paths
    assert "tatonnement.alpah" in paths


def test_missing_schema():
    raw = copy.deepcopy(MINIMAL)
    del raw["schema"]
    assert "schema" in _paths(_issues(raw))


def test_every_problem_is_collected():
    raw = copy.deepcopy(MINIMAL)
    raw["tatonnement"] = {"alpha": 2.0, "tau": -1.0, "mechanism": "C"}
    paths = _paths(_issues(raw))
    for p in ("tatonnement.alpha", "tatonnement.tau", "tatonnement.mechanism"):
        assert p in paths


def test_set_without_zero_rejected():
    raw = copy.deepcopy(MINIMAL)
    raw["agents"][0]["set"] = {"kind": "box", "lower": 0.5, "upper": 1.0}
    assert "agents[0].set" in _paths(_issues(raw))


def test_parse_error_reports_line(tmp_path):
    f = tmp_path / "bad.yaml"
    f.write_text("schema: oge-scenario/1\nagents: [\n  {name: x\n")
    with pytest.raises(ScenarioError) as ei:
        load_scenario(f)
    assert any("parse error" in m for _, m in ei.value.issues)


def test_missing_file():
    with pytest.raises(ScenarioError):
        load_scenario("/nonexistent/scenario.yaml")


def test_roundtrip_through_yaml(tmp_path):
    sc = load_scenario("paper-6.3")
    f = tmp_path / "copy.yaml"
    f.write_text(yaml.safe_dump(sc.raw))
    sc2 = load_scenario(f)
    e1, e2 = sc.economy(), sc2.economy()
    np.testing.assert_array_equal(e1.workload.units, e2.workload.units)


def test_scalar_set_parameters_broadcast():
    sc = load_scenario("bewley-nested")
    for K in sc.k_list():
        assert all(s.dim == K for s in sc.sets(K))


def test_outside_workload_warns(caplog):
    raw = load_scenario("taylor-two-path").raw
    raw["workload"]["units"][1]["coords"] = [5.0, 5.0]
    with caplog.at_level(logging.WARNING, logger="orchestrated_ge.scenario"):
        parse_scenario(raw)
    assert any("outside its set" in r.message for r in caplog.records)


def test_taylor_section():
    rule, steps = load_scenario("taylor-two-path").taylor()
    assert steps == 6 and rule.phi_lat == 2.0
