"""System models: switched affine, traffic network, monotonicity checks."""

import numpy as np
import pytest

from monosafe.order import Box
from monosafe.systems import (EW, NS, Link, SwitchedAffineSystem, TrafficNetwork,
                              check_monotone, cooperative_bound_check,
                              system_from_dict, system_hash)

A1 = [[1.5, 0.1], [0.2, 0.5]]
A2 = [[0.7, 0.1], [0.1, 1.1]]
W = [0.2, 0.1]


def fresh_switched():
    return SwitchedAffineSystem([A1, A2], W)


def test_switched_step_hand_values():
    s = fresh_switched()
    assert np.allclose(s.step([10, 32], s.w_star, 1), [18.4, 18.1])
    assert np.allclose(s.step([10, 32], s.w_star, 2), [10.4, 36.3])
    # zero disturbance is admissible
    assert np.allclose(s.step([1, 0], [0, 0], 1), [1.5, 0.2])


def test_switched_step_validation():
    s = fresh_switched()
    with pytest.raises(ValueError):
        s.step([1, 1], s.w_star, 3)           # no such mode
    with pytest.raises(ValueError):
        s.step([1, 1], [0.3, 0.1], 1)         # w above w*
    with pytest.raises(ValueError):
        s.step([-1, 1], s.w_star, 1)


def test_switched_rejects_negative_matrix():
    with pytest.raises(ValueError):
        SwitchedAffineSystem([[[1.0, -0.1], [0.0, 1.0]]], [0.0, 0.0])


def mini_net(with_turn=False):
    links = [
        Link(id=1, direction=EW, head="a", c=5.0, x_s=20.0, w_star=2.0, entry=True),
        Link(id=2, direction=NS, head="a", c=5.0, x_s=20.0, w_star=1.0, entry=True),
    ]
    turns = []
    if with_turn:
        links.append(Link(id=3, direction=NS, head="b", c=4.0, x_s=20.0,
                          w_star=0.0, entry=False))
        turns = [(2, 3, 0.4)]
    junctions = ["a", "b"] if with_turn else ["a"]
    return TrafficNetwork(links, junctions, turns)


def test_traffic_step_hand_values():
    net = mini_net()
    # NS green: link 2 serves min(7,5)=5, link 1 queues its demand
    assert np.allclose(net.step([10, 7], net.w_star, (NS,)), [12, 3])
    assert np.allclose(net.step([10, 7], net.w_star, (EW,)), [7, 8])
    # sub-capacity queue empties completely
    assert np.allclose(net.step([10, 3], net.w_star, (NS,)), [12, 1])


def test_traffic_turn_propagation():
    net = mini_net(with_turn=True)
    x1 = net.step([10, 7, 2], net.w_star, (NS, NS))
    # link 2 releases 5, of which 0.4*5=2 lands on link 3; link 3 also serves min(2,4)
    assert np.allclose(x1, [12, 3, 2 - 2 + 2])


def test_traffic_outflow():
    net = mini_net()
    assert net.outflow([10, 7], (NS,), 2) == 5.0
    assert net.outflow([10, 7], (NS,), 1) == 0.0
    assert net.outflow([10, 3], (EW,), 1) == 5.0
    assert net.outflow([10, 3], (EW,), 2) == 0.0


def test_traffic_step_validation():
    net = mini_net()
    with pytest.raises(ValueError):
        net.step([1, 1], net.w_star, (NS,) * 2)      # wrong phase count
    with pytest.raises(ValueError):
        net.step([1, 1], net.w_star, ("XX",))
    with pytest.raises(ValueError):
        net.step([1, 1], [3.0, 1.0], (NS,))          # w above w*


def test_traffic_topology_validation():
    dup = [Link(1, EW, "a", 5, 20, 2, True), Link(1, NS, "a", 5, 20, 1, True)]
    with pytest.raises(ValueError):
        TrafficNetwork(dup, ["a"], [])
    bad_head = [Link(1, EW, "zz", 5, 20, 2, True)]
    with pytest.raises(ValueError):
        TrafficNetwork(bad_head, ["a"], [])
    links = [Link(1, EW, "a", 5, 20, 2, True), Link(2, NS, "a", 5, 20, 0, False)]
    with pytest.raises(ValueError):   # ratios for one source sum beyond 1
        TrafficNetwork(links, ["a"], [(1, 2, 0.7), (1, 2, 0.6)])
    with pytest.raises(ValueError):   # ratio outside [0, 1]
        TrafficNetwork(links, ["a"], [(1, 2, 1.3)])
    with pytest.raises(ValueError):   # turns into an entry link
        TrafficNetwork([Link(1, EW, "a", 5, 20, 2, True),
                        Link(2, NS, "a", 5, 20, 1, True)], ["a"], [(1, 2, 0.5)])


def test_traffic_mass_conserves_or_exits(traffic):
    net, _, _ = traffic
    rng = np.random.default_rng(5)
    controls = list(net.controls)
    for _ in range(200):
        x = rng.uniform(0, net.x_s)
        u = controls[rng.integers(len(controls))]
        w = rng.uniform(0, net.w_star)
        x1 = net.step(x, w, u)
        assert np.all(x1 >= -1e-12)
        assert np.sum(x1) <= np.sum(x) + np.sum(w) + 1e-9


def test_traffic_bundled_table_golden(traffic):
    net, safe_set, _ = traffic
    assert net.junctions == ("a", "b", "c", "d", "e", "f")
    assert net.state_dim == 12
    assert np.allclose(net.x_s, 60.0)
    x0 = np.array([48, 14, 54, 48, 17.66, 54, 4, 12.47, 28, 60, 28, 29], float)
    x1 = net.step(x0, net.w_star, (NS,) * 6)
    expected = [56, 18, 60, 56, 22.66, 60, 4, 5.27, 15, 54, 24, 24]
    assert np.allclose(x1, expected, atol=1e-9)
    assert safe_set.contains(x0)
    assert not safe_set.contains(np.full(12, 60.5))


def test_beta_resolution_switch(traffic_spec_dict):
    first = system_from_dict(traffic_spec_dict, "first")[0]
    second = system_from_dict(traffic_spec_dict, "second")[0]
    r1 = {(s, d): r for (s, d, r) in first.turns}
    r2 = {(s, d): r for (s, d, r) in second.turns}
    assert r1[(11, 5)] == 0.5 and r2[(11, 5)] == 0.3
    assert {k: v for k, v in r1.items() if k != (11, 5)} == \
           {k: v for k, v in r2.items() if k != (11, 5)}


def test_system_hash_binds_content(traffic_spec_dict, traffic, case1):
    # invariant under key order, sensitive to values, shared by both resolutions
    shuffled = dict(reversed(list(traffic_spec_dict.items())))
    assert system_hash(shuffled) == system_hash(traffic_spec_dict) == traffic[2]
    tweaked = dict(traffic_spec_dict)
    tweaked["links"] = [dict(l) for l in traffic_spec_dict["links"]]
    tweaked["links"][0]["c"] = 21
    assert system_hash(tweaked) != traffic[2]
    assert case1[2] != traffic[2]


def test_switched_to_dict_round_trip(case1):
    s = case1[0]
    rebuilt = system_from_dict(s.to_dict())[0]
    x = np.array([3.0, 4.0])
    for m in s.controls:
        assert np.array_equal(rebuilt.step(x, s.w_star, m), s.step(x, s.w_star, m))


def test_traffic_to_dict_round_trip(traffic):
    net = traffic[0]
    rebuilt = system_from_dict(net.to_dict())[0]
    x = np.linspace(1, 30, 12)
    u = (NS, EW, NS, EW, NS, EW)
    assert np.allclose(rebuilt.step(x, net.w_star, u), net.step(x, net.w_star, u))
    assert system_hash(rebuilt.to_dict()) == system_hash(net.to_dict())


def test_check_monotone_clean_systems(traffic):
    s = fresh_switched()
    rep = check_monotone(s, 500, seed=11, domain_box=Box([50.0, 50.0]))
    assert rep.violations == 0 and rep.samples == 500
    net = traffic[0]
    rep = check_monotone(net, 300, seed=12, domain_box=Box(net.x_s))
    assert rep.violations == 0


def test_check_monotone_flags_mutated_system():
    s = fresh_switched()
    s.modes[0][0, 1] = -0.3       # poke one negative entry past construction
    rep = check_monotone(s, 500, seed=13, domain_box=Box([50.0, 50.0]))
    assert rep.violations > 0
    assert rep.worst_violation > 0


def test_cooperative_bound_check():
    net = mini_net(with_turn=True)
    alpha = {(2, 3): 0.8}
    # incoming release can add alpha/beta*c = 0.8/0.4*5 = 10 on link 3
    assert cooperative_bound_check(net, {3: 30.0}, alpha) == [(3, True)]
    assert cooperative_bound_check(net, {3: 29.0}, alpha) == [(3, False)]
    with pytest.raises(ValueError):
        cooperative_bound_check(net, {3: 30.0}, {})
    zero = TrafficNetwork(
        [Link(1, EW, "a", 5, 20, 2, True), Link(2, NS, "a", 5, 20, 0, False),
         Link(3, NS, "b", 4, 20, 0, False)],
        ["a", "b"], [(1, 3, 0.0)])
    with pytest.raises(ValueError):
        cooperative_bound_check(zero, {3: 30.0}, {(1, 3): 0.5})
