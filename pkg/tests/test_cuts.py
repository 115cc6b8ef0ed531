import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qccp.cuts import CutPool, TriangleCut, cluster, dsatur, separate, tabucol

from cases import random_pool, random_sym


def brute_separate(Y, num_cuts, excluded=(), tol=1e-6):
    X = Y[1:, 1:]
    m = X.shape[0]
    found = []
    for e in range(m):
        for f, g in itertools.combinations(range(m), 2):
            if e in (f, g):
                continue
            v = X[e, f] + X[e, g] - X[e, e] - X[f, g]
            c = TriangleCut(e, f, g)
            if v > tol and c not in excluded:
                found.append((-v, e, f, g, c))
    found.sort(key=lambda t: t[:4])
    return [t[4] for t in found[:num_cuts]]


def test_cut_normalizes_order():
    assert TriangleCut(0, 5, 2) == TriangleCut(0, 2, 5)
    with pytest.raises(ValueError):
        TriangleCut(1, 1, 2)


@given(st.integers(3, 7), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_separate_matches_brute_force(m, k, seed):
    rng = np.random.default_rng(seed)
    Y = random_sym(rng, m + 1)
    assert separate(Y, k) == brute_separate(Y, k)


def test_separate_skips_excluded_and_breaks_ties_lexicographically():
    m = 5
    Y = np.zeros((m + 1, m + 1))
    Y[1:, 1:] = 1.0
    np.fill_diagonal(Y[1:, 1:], 0.0)
    # every triple is violated by exactly 1
    got = separate(Y, 4)
    assert got == [TriangleCut(0, 1, 2), TriangleCut(0, 1, 3), TriangleCut(0, 1, 4), TriangleCut(0, 2, 3)]
    assert separate(Y, 2, excluded=got[:2]) == got[2:]


def test_separate_empty_cases():
    assert separate(np.zeros((3, 3)), 5) == []
    assert separate(np.eye(6), 5) == []
    assert separate(random_sym(np.random.default_rng(0), 6), 0) == []


def test_pool_add_deduplicates_and_resets_clusters():
    pool = cluster(CutPool([TriangleCut(0, 1, 2)]))
    assert pool.clusters
    pool.add([TriangleCut(0, 2, 1), TriangleCut(3, 4, 5)])
    assert len(pool) == 2 and pool.clusters == []


@settings(max_examples=30)
@given(st.integers(4, 9), st.integers(0, 60), st.integers(0, 2**32 - 1))
def test_cluster_is_proper_partition(m, k, seed):
    pool = random_pool(np.random.default_rng(seed), m, k, seed=seed)
    assert pool.is_proper()
    for cl, (e, f, g) in zip(pool.clusters, pool.cluster_arrays()):
        idx = np.concatenate([e, f, g])
        assert len(set(idx.tolist())) == idx.size == 3 * len(cl)


def test_cluster_is_deterministic():
    rng = np.random.default_rng(3)
    a = random_pool(rng, 8, 40, seed=7)
    b = cluster(CutPool(list(a.cuts)), seed=7)
    assert a.clusters == b.clusters


def test_disjoint_cuts_share_one_cluster():
    pool = cluster(CutPool([TriangleCut(0, 1, 2), TriangleCut(3, 4, 5), TriangleCut(6, 7, 8)]))
    assert pool.clusters == [[0, 1, 2]]


def ring(n):
    return [[(v - 1) % n, (v + 1) % n] for v in range(n)]


def proper(adj, colors):
    return all(colors[u] != colors[v] for v in range(len(adj)) for u in adj[v])


def test_tabucol_odd_cycle():
    rng = np.random.default_rng(0)
    adj = ring(7)
    assert tabucol(7, adj, 2, np.zeros(7, dtype=int), rng, max_iter=2000) is None
    col = tabucol(7, adj, 3, np.zeros(7, dtype=int), rng)
    assert col is not None and proper(adj, col) and col.max() < 3


def test_tabucol_bipartite():
    rng = np.random.default_rng(1)
    adj = [[] for _ in range(8)]
    for i in range(4):
        for j in range(4, 8):
            adj[i].append(j)
            adj[j].append(i)
    col = tabucol(8, adj, 2, rng.integers(0, 5, size=8), rng)
    assert col is not None and proper(adj, col)


def test_dsatur_proper_on_random_graphs():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n = 12
        adj = [[] for _ in range(n)]
        for i, j in itertools.combinations(range(n), 2):
            if rng.random() < 0.4:
                adj[i].append(j)
                adj[j].append(i)
        assert proper(adj, dsatur(n, adj))


def test_violation_reads_matrix_entries():
    Y = np.zeros((4, 4))
    Y[1, 2] = Y[2, 1] = 2.0
    Y[1, 3] = Y[3, 1] = 1.0
    Y[1, 1] = 0.5
    assert TriangleCut(0, 1, 2).violation(Y) == pytest.approx(2.5)
