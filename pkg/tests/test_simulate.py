"""Simulation oracle: rolls, memberships, verification, dominance, CSV."""

import numpy as np
import pytest

from monosafe.certificate import SSequenceCertificate
from monosafe.invariance import build_attractive_set, build_rcis, compute_limit_cycle
from monosafe.rng import SplitMix64
from monosafe.simulate import (dominance_check, feedback, gamma_excess, open_loop,
                               simulate, uniform, verify_certificate,
                               worst_case_w_star, write_trajectory_csv)


def test_worst_case_endpoint_matches_witness(case1, case1_cert):
    sys_, _, _ = case1
    traj = simulate(sys_, case1_cert.x_star[0], open_loop(case1_cert),
                    worst_case_w_star(), 7)
    assert np.allclose(traj.states[-1], [16.15104296, 33.20835472], atol=1e-8)
    assert np.allclose(traj.states[-1], [16.15, 33.21], atol=0.01)


def test_steps_contract(case1, case1_cert):
    sys_, _, _ = case1
    with pytest.raises(ValueError):
        simulate(sys_, [1, 1], open_loop(case1_cert), worst_case_w_star(), 0)
    traj = simulate(sys_, [1, 1], open_loop(case1_cert), worst_case_w_star(), 1)
    assert len(traj.states) == 2 and len(traj.controls) == 1


def test_trajectory_replays_step_function(case1, case1_cert):
    sys_, _, _ = case1
    traj = simulate(sys_, [10, 32], open_loop(case1_cert), uniform(5), 50)
    for k in range(len(traj.controls)):
        resim = sys_.step(traj.states[k], traj.disturbances[k], traj.controls[k])
        assert np.array_equal(traj.states[k + 1], resim)
        assert np.all(traj.disturbances[k] <= sys_.w_star)
        assert np.all(traj.disturbances[k] >= 0)


def test_membership_columns(case1, case1_cert):
    sys_, S, _ = case1
    rcis = build_rcis(case1_cert)
    gamma = build_attractive_set(compute_limit_cycle(sys_, case1_cert))
    bare = simulate(sys_, [10, 32], open_loop(case1_cert), uniform(1), 5)
    assert all(v is None for v in bare.safe + bare.in_omega + bare.in_gamma)
    full = simulate(sys_, [10, 32], open_loop(case1_cert), uniform(1), 200,
                    safe_set=S, omega=rcis.region, gamma=gamma)
    assert all(full.safe) and all(full.in_omega)
    first = next(k for k, g in enumerate(full.in_gamma) if g)
    assert all(full.in_gamma[first:])          # sticky once entered


def test_uniform_adversary_determinism(case1, case1_cert):
    sys_, _, _ = case1
    mk = lambda seed: simulate(sys_, [10, 32], open_loop(case1_cert),
                               uniform(seed), 40)
    a, b, c = mk(9), mk(9), mk(10)
    assert all(np.array_equal(x, y) for x, y in zip(a.states, b.states))
    assert any(not np.array_equal(x, y) for x, y in zip(a.states, c.states))
    # spawned child streams give independent yet reproducible runs
    d = simulate(sys_, [10, 32], open_loop(case1_cert),
                 uniform(SplitMix64(9).spawn(3)), 40)
    assert any(not np.array_equal(x, y) for x, y in zip(a.states, d.states))


def test_feedback_policy_halts_outside(case1, case1_cert):
    sys_, S, _ = case1
    rcis = build_rcis(case1_cert)
    ok = simulate(sys_, [10, 32], feedback(rcis), uniform(2), 30, safe_set=S)
    assert ok.status == "completed" and all(ok.safe)
    out = simulate(sys_, [49.0, 0.2], feedback(rcis), worst_case_w_star(), 30)
    assert out.status == "halted_outside_region"
    assert len(out.states) == 1 and len(out.controls) == 0


def test_verify_certificate_passes_bundled(case1, case1_cert):
    sys_, S, _ = case1
    report = verify_certificate(sys_, S, case1_cert)
    assert report.passed
    assert report.tol == case1_cert.tol == 0.01
    # the rounded reference witness closes only within its declared tolerance
    assert 0 < report.closure.worst_residual < 0.01
    d = report.to_dict()
    assert d["passed"] is True and d["closure"]["passed"] is True


def test_verify_flags_each_condition(case1, case1_cert):
    sys_, S, _ = case1
    cert = case1_cert
    flipped = SSequenceCertificate(cert.T, (2,) + cert.controls[1:], cert.x_star,
                                   cert.system_hash, cert.tol)
    rep = verify_certificate(sys_, S, flipped)
    assert not rep.passed and not rep.dynamics.passed
    assert rep.dynamics.first_violation_step == 0

    unsafe_states = tuple(np.asarray(x) * 3.0 for x in cert.x_star)
    blown = SSequenceCertificate(cert.T, cert.controls, unsafe_states, tol=cert.tol)
    rep = verify_certificate(sys_, S, blown)
    assert not rep.safety.passed

    drifted = tuple(cert.x_star[:-1]) + (np.asarray(cert.x_star[-1]) + 5.0,)
    rep = verify_certificate(sys_, S,
                             SSequenceCertificate(cert.T, cert.controls, drifted,
                                                  tol=cert.tol))
    assert not rep.closure.passed and rep.closure.first_violation_step == cert.T


def test_dominance_check(case1, case1_cert):
    sys_, _, _ = case1
    cert = case1_cert
    below = simulate(sys_, [10.0, 32.0], open_loop(cert), uniform(4), 100)
    rep = dominance_check(sys_, cert, below)
    assert rep.dominated and rep.first_violation_step is None
    # worst case from x*_0 dominates itself with equality
    self_run = simulate(sys_, cert.x_star[0], open_loop(cert), worst_case_w_star(), 70)
    rep = dominance_check(sys_, cert, self_run)
    assert rep.dominated and rep.worst_excess <= 1e-9


def test_dominance_preconditions(case1, case1_cert):
    sys_, _, _ = case1
    cert = case1_cert
    above = simulate(sys_, [20.0, 34.0], open_loop(cert), uniform(4), 10)
    with pytest.raises(ValueError):
        dominance_check(sys_, cert, above)
    fb = simulate(sys_, [10.0, 32.0], feedback(build_rcis(cert)), uniform(4), 10)
    with pytest.raises(ValueError):
        dominance_check(sys_, cert, fb)


def test_gamma_excess_decreases_and_reaches(case1, case1_cert):
    sys_, _, _ = case1
    cert = case1_cert
    cycle = compute_limit_cycle(sys_, cert)
    traj = simulate(sys_, cert.x_star[0], open_loop(cert), worst_case_w_star(), 2500)
    excess = gamma_excess(traj, cycle)
    phase0 = excess[::cert.T]
    assert all(b <= a + 1e-12 for a, b in zip(phase0, phase0[1:]))
    assert phase0[-1] <= 1e-6


def test_csv_output(case1, case1_cert, tmp_path):
    sys_, S, _ = case1
    rcis = build_rcis(case1_cert)
    gamma = build_attractive_set(compute_limit_cycle(sys_, case1_cert))
    traj = simulate(sys_, [10, 32], open_loop(case1_cert), uniform(6), 30,
                    safe_set=S, omega=rcis.region, gamma=gamma)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trajectory_csv(traj, p1)
    write_trajectory_csv(traj, p2)
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().splitlines()
    assert lines[0] == "step,phase,x_1,x_2,u,safe,in_omega,in_gamma"
    assert len(lines) == len(traj.states) + 1
    last = lines[-1].split(",")
    assert last[4] == ""                      # no control on the final state
    first = lines[1].split(",")
    assert first[:2] == ["0", "0"] and first[4] == "1" and first[5] == "1"


def test_csv_traffic_phases_colon_joined(traffic, traffic_cert, tmp_path):
    net, S, _ = traffic
    traj = simulate(net, traffic_cert.x_star[0], open_loop(traffic_cert),
                    worst_case_w_star(), 5, safe_set=S)
    path = tmp_path / "t.csv"
    write_trajectory_csv(traj, path)
    row = path.read_text().splitlines()[1].split(",")
    assert row[14] == "NS:NS:NS:NS:NS:NS"
