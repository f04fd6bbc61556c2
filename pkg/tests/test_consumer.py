import numpy as np
import pytest
from hypothesis import given, strategies as st

from orchestrated_ge.consumer import (
    SloParams,
    WelfareSpec,
    budget_residual,
    derived_path_metric,
    saturate_budget,
    slo_feasible,
    welfare,
)
from orchestrated_ge.dag import enumerate_paths
from orchestrated_ge.errors import ParameterError, SaturationUndefinedError
from orchestrated_ge.synthetic import diamond_dag


def spec(reg=(0.1, 0.4, 0.2), lat=(1.0, 0.5, 2.0), qual=(0.3, 0.9, 0.1), l1=1.0, l2=2.0, **kw):
    slo = SloParams(l1, l2, np.array(lat), np.array(qual), np.zeros(len(lat)), **kw)
    return WelfareSpec(np.array(reg), slo)


def test_zero_penalties_zero_welfare():
    s = spec(reg=(0, 0, 0), lat=(0, 0, 0), qual=(0, 0, 0))
    assert welfare([0.2, 0.3, 0.5], s) == 0


def test_point_mass_welfare():
    s = spec(Q_min=0.5)
    for q in range(3):
        e = np.eye(3)[q]
        expect = -(s.reg[q] + 1.0 * s.slo.lat[q] + 2.0 * (0.5 - s.slo.qual[q]))
        assert welfare(e, s) == pytest.approx(expect, abs=1e-15)


def test_doubling_latency_weight():
    s = spec(reg=(0, 0, 0), qual=(0, 0, 0))
    pi = np.array([0.2, 0.3, 0.5])
    assert welfare(pi, s.with_weights(2.0, 2.0)) == pytest.approx(2 * welfare(pi, s))


simplex3 = st.lists(st.floats(0.01, 1), min_size=3, max_size=3).map(lambda v: np.array(v) / sum(v))


@given(simplex3, simplex3, st.floats(0, 1))
def test_welfare_affine(p1, p2, lam):
    s = spec()
    mix = welfare(lam * p1 + (1 - lam) * p2, s)
    assert abs(mix - (lam * welfare(p1, s) + (1 - lam) * welfare(p2, s))) <= 1e-12


def test_entropy_regularizer():
    s = WelfareSpec(np.zeros(2), SloParams(1, 1, np.zeros(2), np.zeros(2), np.zeros(2)), epsilon=0.1)
    assert welfare([0.5, 0.5], s) == pytest.approx(0.1 * np.log(2))
    assert welfare([1.0, 0.0], s) == 0.0


def test_slo_examples():
    s = spec()
    assert slo_feasible([0.2, 0.3, 0.5], s).feasible
    one = WelfareSpec(np.zeros(1), SloParams(1, 1, np.array([2.0]), np.zeros(1), np.zeros(1), L_max=1.0))
    r = slo_feasible([1.0], one)
    assert not r.feasible and r.latency_slack == -1.0
    two = WelfareSpec(np.zeros(2), SloParams(1, 1, np.array([0.0, 2.0]), np.zeros(2), np.zeros(2), L_max=1.0))
    r = slo_feasible([0.5, 0.5], two)
    assert r.feasible and r.latency_slack == 0.0


@given(simplex3, simplex3)
def test_slo_set_convex(p1, p2):
    s = spec(L_max=1.2, Q_min=0.3)
    if slo_feasible(p1, s).feasible and slo_feasible(p2, s).feasible:
        assert slo_feasible(0.5 * (p1 + p2), s).feasible


def test_budget_examples():
    p = np.array([[0.2, 0.3], [0.5, 0.0]])
    prof = np.array([1.0, 0.5])
    assert budget_residual(p, np.zeros((2, 2)), prof) == -1.5
    y = np.array([[1.0, 2.0], [1.0, 7.0]])
    assert budget_residual(p, y, np.sum(p * y, axis=1)) == 0.0
    assert budget_residual(np.zeros((2, 2)), y, np.zeros(2)) == 0.0


def test_saturation_examples():
    p = np.array([[1.0, 0.0]])
    d, mu = saturate_budget(p, np.array([[2.0, 5.0]]), [2.0])
    assert mu == 1.0 and d.tolist() == [[2.0, 5.0]]
    d, mu = saturate_budget(p, np.array([[2.0, 0.0]]), [4.0])
    assert mu == 2.0
    d, mu = saturate_budget(np.zeros((1, 2)), np.zeros((1, 2)), [0.0])
    assert mu == 1.0 and budget_residual(np.zeros((1, 2)), d, [0.0]) == 0.0
    with pytest.raises(SaturationUndefinedError):
        saturate_budget(p, np.array([[0.0, 1.0]]), [1.0])


@given(st.lists(st.floats(0.01, 5), min_size=4, max_size=4), st.lists(st.floats(0.01, 5), min_size=4, max_size=4),
       st.floats(0.0, 10))
def test_saturation_binds(pv, dv, total):
    p, d = np.array(pv).reshape(2, 2), np.array(dv).reshape(2, 2)
    ds, mu = saturate_budget(p, d, [total, 0.0])
    assert abs(budget_residual(p, ds, [total, 0.0])) <= 1e-12 * (1 + total)


def test_invalid_params():
    with pytest.raises(ParameterError):
        SloParams(0.0, 1.0, np.zeros(1), np.zeros(1), np.zeros(1))
    with pytest.raises(ParameterError):
        WelfareSpec(np.array([-1.0]), SloParams(1, 1, np.zeros(1), np.zeros(1), np.zeros(1)))


def test_derived_metric():
    ps = enumerate_paths(diamond_dag())
    y = np.arange(8.0).reshape(4, 2)
    np.testing.assert_allclose(derived_path_metric(y, ps, [1.0, 0.0]), [0 + 2 + 6, 0 + 4 + 6])
