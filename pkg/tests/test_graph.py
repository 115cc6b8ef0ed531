import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qccp.errors import InstanceInfeasible, LimitExceeded
from qccp.graph import (DiGraph, bipartite_rep, decompose_cycles, enumerate_cycle_covers, find_cycle_cover,
                        is_cycle_cover, make_cover, max_matching, never_used_arcs)

from conftest import random_feasible_graph


def derangements(n):
    return round(math.factorial(n) * sum((-1) ** k / math.factorial(k) for k in range(n + 1)))


@st.composite
def digraphs(draw, max_n=6):
    n = draw(st.integers(2, max_n))
    pairs = list(itertools.permutations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return DiGraph(n, sorted(chosen))


def brute_covers(g):
    """Arc subsets of size n that are cycle covers, by exhaustive search."""
    out = set()
    for sub in itertools.combinations(range(g.m), g.n):
        x = np.zeros(g.m)
        x[list(sub)] = 1
        if is_cycle_cover(g, x):
            out.add(sub)
    return out


def test_digraph_rejects_bad_arcs():
    with pytest.raises(ValueError):
        DiGraph(3, [(0, 0)])
    with pytest.raises(ValueError):
        DiGraph(3, [(0, 1), (0, 1)])
    with pytest.raises(ValueError):
        DiGraph(3, [(0, 3)])


def test_incidence_rows_sum_to_degrees():
    g = DiGraph.complete(4)
    U, V = g.incidence()
    assert U.sum(axis=1).tolist() == [3] * 4
    assert V.sum(axis=1).tolist() == [3] * 4
    assert (U.sum(axis=0) == 1).all() and (V.sum(axis=0) == 1).all()


def test_directed_cycle_has_one_cover():
    g = DiGraph.cycle(5)
    covers = enumerate_cycle_covers(g)
    assert len(covers) == 1
    assert covers[0].cycles == ((0, 1, 2, 3, 4),)


def test_k3_has_two_covers():
    covers = enumerate_cycle_covers(DiGraph.complete(3))
    assert len(covers) == 2
    assert all(len(c.cycles) == 1 and len(c.cycles[0]) == 3 for c in covers)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_complete_graph_cover_count_is_derangements(n):
    assert len(enumerate_cycle_covers(DiGraph.complete(n))) == derangements(n)


def test_enumeration_limit():
    with pytest.raises(LimitExceeded):
        enumerate_cycle_covers(DiGraph.complete(5), limit=10)


def test_decompose_cycles_orders_by_lowest_node():
    g = DiGraph(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
    assert decompose_cycles(g, [3, 2, 1, 0]) == ((0, 1), (2, 3))
    with pytest.raises(ValueError):
        decompose_cycles(g, [0])


def test_make_cover_rejects_partial_sets():
    g = DiGraph(3, [(0, 1), (1, 2), (2, 0), (1, 0)])
    with pytest.raises(ValueError):
        make_cover(g, [0, 3])


def test_is_cycle_cover_checks_binary_and_degrees():
    g = DiGraph.complete(3)
    x = np.zeros(g.m)
    assert not is_cycle_cover(g, x)
    x[[g.arc_index(0, 1), g.arc_index(1, 2), g.arc_index(2, 0)]] = 1
    assert is_cycle_cover(g, x)
    assert not is_cycle_cover(g, 0.5 * x)


def test_no_cover_raises():
    g = DiGraph(3, [(0, 1), (1, 2)])
    with pytest.raises(InstanceInfeasible):
        find_cycle_cover(g)
    with pytest.raises(InstanceInfeasible):
        never_used_arcs(g)


def test_chord_is_never_used():
    # 4-cycle plus a chord 0 -> 2: the chord cannot be in a cover
    g = DiGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
    assert never_used_arcs(g) == {4}


def test_bipartite_components():
    # every edge of B(C_n) is its own component; B(K_n) is connected
    assert bipartite_rep(DiGraph.cycle(4)).component_count == 4
    assert bipartite_rep(DiGraph.complete(3)).component_count == 1
    two = DiGraph(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
    rep = bipartite_rep(two)
    assert rep.component_count == 4 and rep.m == 4


@given(digraphs())
def test_enumeration_matches_exhaustive_search(g):
    got = {c.arcs for c in enumerate_cycle_covers(g)}
    assert got == brute_covers(g)


@given(digraphs())
def test_never_used_arcs_match_enumeration(g):
    covers = enumerate_cycle_covers(g)
    if not covers:
        with pytest.raises(InstanceInfeasible):
            never_used_arcs(g)
        return
    used = set().union(*(c.arcs for c in covers))
    assert never_used_arcs(g) == set(range(g.m)) - used


@given(digraphs())
def test_max_matching_finds_cover_iff_one_exists(g):
    mate_left, _ = max_matching(g)
    perfect = all(a >= 0 for a in mate_left)
    assert perfect == bool(brute_covers(g))


def test_planted_graphs_have_covers(rng):
    for _ in range(20):
        g = random_feasible_graph(rng, int(rng.integers(3, 9)), 0.3)
        assert is_cycle_cover(g, find_cycle_cover(g).indicator(g.m))
