import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qccp.graph import DiGraph, InstanceInfeasible, find_cycle_cover
from qccp.instances import QcpInstance

settings.register_profile("qccp", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("qccp")

ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)


def random_feasible_graph(rng, n, p):
    """Random digraph on ``n`` nodes containing a planted cycle cover."""
    perm = rng.permutation(n)
    # derangement-like planted cover: a random cyclic order through all nodes
    arcs = {(int(perm[i]), int(perm[(i + 1) % n])) for i in range(n)}
    for i, j in itertools.permutations(range(n), 2):
        if rng.random() < p:
            arcs.add((i, j))
    return DiGraph(n, sorted(arcs))


def random_instance(rng, n, p, high=20):
    g = random_feasible_graph(rng, n, p)
    q = {(e, f): float(rng.integers(0, high + 1)) for e in range(g.m) for f in g.successors(e)}
    return QcpInstance(g, q)


def small_graph(rng, max_m=6):
    """Random digraph with at most ``max_m`` arcs that has a cycle cover."""
    while True:
        n = int(rng.integers(2, 5))
        pairs = list(itertools.permutations(range(n), 2))
        k = int(rng.integers(n, min(max_m, len(pairs)) + 1))
        idx = rng.choice(len(pairs), size=k, replace=False)
        g = DiGraph(n, sorted(pairs[i] for i in idx))
        try:
            find_cycle_cover(g)
        except InstanceInfeasible:
            continue
        return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
