import numpy as np
import pytest

from qccp.errors import EmptyPool, ValidationError, W0NearZero
from qccp.graph import DiGraph, find_cycle_cover
from qccp.heuristics import (CyclePool, SqParams, UbResult, all_upper_bounds, perron_ratio, round_budget,
                             sq_learning, ub_euclidean, ub_hybrid, ub_oversample, ub_undersample, verified_cover)
from qccp.instances import QcpInstance
from qccp.oracle import brute_opt

from conftest import random_instance


def rank_one(x):
    v = np.r_[1.0, x]
    return np.outer(v, v)


def arcs_of(g, cycle_nodes):
    return [g.arc_index(cycle_nodes[i], cycle_nodes[(i + 1) % len(cycle_nodes)]) for i in range(len(cycle_nodes))]


def test_integral_point_is_returned_by_every_rounding():
    rng = np.random.default_rng(0)
    inst = random_instance(rng, 7, 0.4)
    cover = find_cycle_cover(inst.graph)
    x = cover.indicator(inst.m)
    Y = rank_one(x)
    for res in (ub_euclidean(inst, x), ub_undersample(inst, x, trials=20), ub_oversample(inst, Y, trials=20)):
        assert res.cover.arcs == cover.arcs
        assert res.value == inst.cover_cost(x)


def test_euclidean_picks_the_heavier_orientation():
    g = DiGraph.complete(3)
    fwd = arcs_of(g, [0, 1, 2])
    x = np.full(g.m, 0.1)
    x[fwd] = 0.9
    res = ub_euclidean(QcpInstance(g, {}), x)
    assert sorted(res.cover.arcs) == sorted(fwd)


def test_zero_costs_give_zero_bounds():
    g = DiGraph.complete(4)
    inst = QcpInstance(g, {})
    x = np.full(g.m, 4 / g.m)
    out = all_upper_bounds(inst, rank_one(x), trials=10, sq_trials=10)
    assert all(r.value == 0.0 for r in out.values())


def three_cycle_instance():
    """Two node triples, each with two orientations of opposite cost."""
    g = DiGraph.complete(6)
    # only arcs inside {0,1,2} and {3,4,5}
    g = g.subgraph([a for a, (t, h) in enumerate(g.arcs) if (t < 3) == (h < 3)])
    cyc = {name: arcs_of(g, nodes) for name, nodes in
           {"f012": [0, 1, 2], "b012": [0, 2, 1], "f345": [3, 4, 5], "b345": [3, 5, 4]}.items()}
    price = {"f012": 1.0, "b012": 10.0, "f345": 10.0, "b345": 1.0}
    q = {}
    for name, arcs in cyc.items():
        for a, b in zip(arcs, arcs[1:] + arcs[:1]):
            q[(a, b)] = price[name]
    return QcpInstance(g, q), cyc


def test_hybrid_recombines_cycles_of_different_covers():
    inst, cyc = three_cycle_instance()
    A = verified_cover(inst, cyc["f012"] + cyc["f345"])
    B = verified_cover(inst, cyc["b012"] + cyc["b345"])
    assert A.cost == B.cost == 33.0
    res = ub_hybrid(inst, [UbResult("eb", A, A.cost, [A]), UbResult("us", B, B.cost, [B])])
    assert res.value == 6.0
    assert sorted(res.cover.arcs) == sorted(cyc["f012"] + cyc["b345"])


def test_pool_best_cover_and_validation():
    g = DiGraph.complete(4)
    inst = QcpInstance(g, {(g.arc_index(0, 1), g.arc_index(1, 0)): 5.0})
    pool = CyclePool(inst)
    with pytest.raises(EmptyPool):
        pool.best_cover()
    pool.add(arcs_of(g, [0, 1]), "a")
    pool.add(arcs_of(g, [1, 0]), "b")  # same cycle, rotated
    pool.add(arcs_of(g, [2, 3]), "a")
    pool.add(arcs_of(g, [0, 1, 2, 3]), "a")
    assert len(pool) == 3
    assert pool.best_cover().cost == 0.0
    assert {t for c in pool for t in c.tags} == {"a", "b"}
    with pytest.raises(ValidationError):
        pool.add([g.arc_index(0, 1), g.arc_index(2, 3)], "a")


def test_verified_cover_rejects_non_covers():
    g = DiGraph.complete(3)
    with pytest.raises(ValidationError):
        verified_cover(QcpInstance(g, {}), [g.arc_index(0, 1), g.arc_index(1, 0)])


def test_rank_one_oversampling_needs_one_round():
    rng = np.random.default_rng(1)
    inst = random_instance(rng, 6, 0.5)
    cover = find_cycle_cover(inst.graph)
    Y = rank_one(cover.indicator(inst.m))
    assert np.allclose(perron_ratio(Y), cover.indicator(inst.m))
    assert round_budget(inst.graph, perron_ratio(Y)) == 1
    res = ub_oversample(inst, Y, trials=5)
    assert res.info["max_rounds"] == 1 and res.cover.arcs == cover.arcs


def test_vanishing_perron_entry():
    g = DiGraph.complete(3)
    Y = np.zeros((g.m + 1, g.m + 1))
    Y[1:, 1:] = np.eye(g.m) * 0.5 + 0.1
    with pytest.raises(W0NearZero):
        ub_oversample(QcpInstance(g, {}), Y, trials=5)


def test_budget_grows_as_probabilities_flatten():
    g = DiGraph.complete(5)
    sharp = np.full(g.m, 0.05)
    sharp[arcs_of(g, [0, 1, 2, 3, 4])] = 1.0
    flat = np.ones(g.m)
    assert round_budget(g, sharp) < round_budget(g, flat)
    assert round_budget(g, flat, q=0.5) < round_budget(g, flat, q=0.999)


def test_randomized_bounds_are_seed_deterministic():
    rng = np.random.default_rng(2)
    inst = random_instance(rng, 7, 0.5)
    x = rng.random(inst.m)
    Y = rank_one(x) + 0.01
    for run in (lambda s: ub_undersample(inst, x, trials=15, seed=s),
                lambda s: ub_oversample(inst, Y, x, trials=15, seed=s)):
        assert run(3).cover.arcs == run(3).cover.arcs
        assert run(3).value == run(3).value

    def sq_cycles(s):
        pool = CyclePool(inst)
        try:
            sq_learning(inst, Y, SqParams(trials=15), seed=s, pool=pool)
        except EmptyPool:
            pass
        return sorted(c.arcs for c in pool)

    assert sq_cycles(3) == sq_cycles(3)


def test_sq_params():
    assert SqParams.for_family("reload").delta == 5
    assert SqParams.for_family("manhattan").trials == 100
    assert SqParams.for_family("er").delta == 20
    with pytest.raises(ValueError):
        SqParams(q0=1.5)
    with pytest.raises(ValueError):
        SqParams(trials=0)


def test_bounds_are_at_least_optimal_and_hybrid_is_best():
    rng = np.random.default_rng(4)
    for _ in range(4):
        inst = random_instance(rng, 6, 0.4)
        opt, best = brute_opt(inst)
        x = best.indicator(inst.m) * 0.6 + 0.4 * rng.random(inst.m)
        out = all_upper_bounds(inst, rank_one(x), trials=30, sq_trials=30)
        for name, res in out.items():
            assert res.value >= opt - 1e-9
            assert res.value == inst.cover_cost(res.cover.indicator(inst.m))
        assert out["hybrid"].value == min(r.value for r in out.values())
