"""Horizon sweep, RCIS construction, limit cycles, policies, necessity bound."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from monosafe.certificate import SSequenceCertificate
from monosafe.invariance import (LimitCycleError, build_attractive_set, build_rcis,
                                 compute_limit_cycle, feedback_policy,
                                 find_s_sequence, necessity_bound, open_loop_policy)
from monosafe.order import PolyLowerSet
from monosafe.systems import SwitchedAffineSystem


@pytest.fixture(scope="module")
def case1_search(case1):
    sys_, S, _ = case1
    return find_s_sequence(sys_, S, t_max=8, objective="max_l1_x0")


def test_sweep_finds_minimal_t7(case1_search):
    res = case1_search
    assert res.found and res.minimal and not res.budget_limited
    assert res.certificate.T == 7
    assert res.certificate.controls == (1, 2, 2, 1, 2, 2, 2)
    assert [r.status for r in res.records] == ["proven_infeasible"] * 6 + ["found"]
    assert [r.T for r in res.records] == list(range(1, 8))


def test_sweep_with_tmin_forfeits_minimality(case1):
    sys_, S, _ = case1
    res = find_s_sequence(sys_, S, t_max=8, t_min=7)
    assert res.found and res.certificate.T == 7
    assert not res.minimal


def test_sweep_budget_exhaustion_is_honest(case1):
    sys_, S, _ = case1
    res = find_s_sequence(sys_, S, t_max=7, node_budget=30)
    assert not res.found and res.budget_limited
    assert any(r.status == "budget_unknown" for r in res.records)
    # horizons never get skipped silently
    assert [r.T for r in res.records] == list(range(1, 8))


def test_sweep_proven_absence():
    sys_ = SwitchedAffineSystem([[[2.0, 0.0], [0.0, 2.0]]], [0.1, 0.1])
    S = PolyLowerSet.rectangle([1.0, 1.0])
    res = find_s_sequence(sys_, S, t_max=3)
    assert not res.found and not res.budget_limited
    assert all(r.status == "proven_infeasible" for r in res.records)


def test_sweep_input_validation(case1):
    sys_, S, _ = case1
    with pytest.raises(ValueError):
        find_s_sequence(sys_, S, t_max=0)
    with pytest.raises(ValueError):
        find_s_sequence(sys_, S, t_max=3, t_min=5)
    with pytest.raises(ValueError):
        find_s_sequence(sys_, S, t_max=3, objective="nope")


def test_rcis_boxes_are_witness_corners(case1_search):
    cert = case1_search.certificate
    rcis = build_rcis(cert)
    assert len(rcis.region.boxes) == cert.T
    for k, box in enumerate(rcis.region.boxes):
        assert np.array_equal(box.corner, cert.x_star[k])
    assert rcis.policy(3) == cert.controls[3]


def test_feedback_policy_minimal_index(case1_search):
    cert = case1_search.certificate
    rcis = build_rcis(cert)
    assert feedback_policy(rcis, np.zeros(2)) == cert.controls[0]
    assert feedback_policy(rcis, [1e6, 1e6]) is None
    for k in range(cert.T):
        expected_p = next(p for p in range(cert.T)
                          if rcis.region.boxes[p].contains(cert.x_star[k]))
        assert feedback_policy(rcis, cert.x_star[k]) == cert.controls[expected_p]


@given(st.integers(0, 300))
def test_open_loop_policy_periodic(case1_cert, k):
    cert = case1_cert
    assert open_loop_policy(cert, k) == open_loop_policy(cert, k + cert.T)
    assert open_loop_policy(cert, k) == cert.controls[k % cert.T]


def test_open_loop_policy_rejects_negative(case1_cert):
    with pytest.raises(ValueError):
        open_loop_policy(case1_cert, -1)


def test_case1_limit_cycle_frozen(case1, case1_search):
    sys_, _, _ = case1
    cert = case1_search.certificate
    cycle = compute_limit_cycle(sys_, cert)
    assert np.allclose(cycle.points[0], [13.62, 27.78], atol=0.01)
    assert cycle.monotone_violations == 0
    assert cycle.residual < 1e-9
    assert cycle.closure_error < 1e-8
    for k in range(cert.T):
        assert np.all(cycle.points[k] <= np.asarray(cert.x_star[k]) + 1e-9)


def test_limit_cycle_fixed_point_in_one_period():
    sys_ = SwitchedAffineSystem([[[0.0, 0.0], [0.0, 0.0]]], [0.3, 0.7])
    cert = SSequenceCertificate(T=1, controls=(1,),
                                x_star=(np.array([0.3, 0.7]), np.array([0.3, 0.7])))
    cycle = compute_limit_cycle(sys_, cert)
    assert cycle.periods == 1
    assert np.allclose(cycle.points[0], [0.3, 0.7])


def test_limit_cycle_error_reports_residual():
    sys_ = SwitchedAffineSystem([[[2.0, 0.0], [0.0, 2.0]]], [0.1, 0.1])
    bogus = SSequenceCertificate(T=1, controls=(1,),
                                 x_star=(np.array([1.0, 1.0]), np.array([2.1, 2.1])))
    with pytest.raises(LimitCycleError) as exc:
        compute_limit_cycle(sys_, bogus, max_periods=5)
    assert exc.value.residual > 0


def test_limit_cycle_tol_validation(case1, case1_cert):
    with pytest.raises(ValueError):
        compute_limit_cycle(case1[0], case1_cert, tol=0.0)


def test_attractive_set_inside_rcis(case1, case1_search):
    sys_, _, _ = case1
    cert = case1_search.certificate
    rcis = build_rcis(cert)
    cycle = compute_limit_cycle(sys_, cert)
    gamma = build_attractive_set(cycle)
    assert len(gamma.boxes) == cert.T
    for point in cycle.points:
        assert rcis.region.contains(point)


def test_necessity_bound_arithmetic():
    assert necessity_bound(1, 1, 0.1, 2) == pytest.approx(100.0)
    assert necessity_bound(5, 0.5, 0.2, 1) == pytest.approx(50.0)
    # doubling eps with n=2 divides the bound by 4
    assert necessity_bound(1, 1, 0.2, 2) == pytest.approx(necessity_bound(1, 1, 0.1, 2) / 4)
    for bad in ((0, 1, 1, 1), (1, -1, 1, 1), (1, 1, 0, 1)):
        with pytest.raises(ValueError):
            necessity_bound(*bad)
    with pytest.raises(ValueError):
        necessity_bound(1, 1, 0.1, 0)
    with pytest.raises(ValueError):
        necessity_bound(1, 1, 0.1, 1.5)
