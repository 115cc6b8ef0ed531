"""Directed graphs, cycle covers and the bipartite representation B(G).

Nodes are ``0..n-1`` and arcs ``0..m-1`` in input order. A cycle cover
(directed 2-factor) selects exactly one outgoing and one incoming arc per
node; it corresponds to a perfect matching of the bipartite graph whose
left copy holds tails and right copy holds heads.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InstanceInfeasible, LimitExceeded


class DiGraph:
    """Simple directed graph with fixed arc numbering."""

    def __init__(self, n: int, arcs: Iterable[tuple[int, int]]):
        arcs = tuple((int(t), int(h)) for t, h in arcs)
        if n < 1:
            raise ValueError("graph needs at least one node")
        seen = set()
        for t, h in arcs:
            if not (0 <= t < n and 0 <= h < n):
                raise ValueError(f"arc ({t}, {h}) has an endpoint outside 0..{n - 1}")
            if t == h:
                raise ValueError(f"self-loop at node {t}")
            if (t, h) in seen:
                raise ValueError(f"duplicate arc ({t}, {h})")
            seen.add((t, h))
        self.n = n
        self.arcs = arcs
        self.m = len(arcs)
        self.tails = np.array([t for t, _ in arcs], dtype=np.int64)
        self.heads = np.array([h for _, h in arcs], dtype=np.int64)
        self.out_adj: list[list[int]] = [[] for _ in range(n)]
        self.in_adj: list[list[int]] = [[] for _ in range(n)]
        for a, (t, h) in enumerate(arcs):
            self.out_adj[t].append(a)
            self.in_adj[h].append(a)
        self._index = {arc: a for a, arc in enumerate(arcs)}

    def arc_index(self, tail: int, head: int) -> int | None:
        return self._index.get((tail, head))

    def successors(self, a: int) -> list[int]:
        """Arcs that may follow arc ``a`` (those leaving its head)."""
        return self.out_adj[self.arcs[a][1]]

    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """Return the out/in incidence matrices ``U``, ``V`` (n x m, int)."""
        U = np.zeros((self.n, self.m), dtype=np.int64)
        V = np.zeros((self.n, self.m), dtype=np.int64)
        idx = np.arange(self.m)
        U[self.tails, idx] = 1
        V[self.heads, idx] = 1
        return U, V

    def subgraph(self, keep: Sequence[int]) -> DiGraph:
        """Graph on the same nodes with only arcs ``keep`` (renumbered in order)."""
        return DiGraph(self.n, [self.arcs[a] for a in keep])

    def __eq__(self, other):
        return isinstance(other, DiGraph) and self.n == other.n and self.arcs == other.arcs

    def __hash__(self):
        return hash((self.n, self.arcs))

    def __repr__(self):
        return f"DiGraph(n={self.n}, m={self.m})"

    @classmethod
    def complete(cls, n: int) -> DiGraph:
        return cls(n, [(i, j) for i in range(n) for j in range(n) if i != j])

    @classmethod
    def cycle(cls, n: int) -> DiGraph:
        return cls(n, [(i, (i + 1) % n) for i in range(n)])


@dataclass(frozen=True)
class CycleCover:
    """A directed 2-factor given by its arc set and its cycle decomposition."""

    arcs: tuple[int, ...]
    cycles: tuple[tuple[int, ...], ...]
    cost: float | None = field(default=None, compare=False)

    def indicator(self, m: int) -> np.ndarray:
        x = np.zeros(m)
        x[list(self.arcs)] = 1.0
        return x

    def with_cost(self, cost: float) -> CycleCover:
        return CycleCover(self.arcs, self.cycles, cost)


def decompose_cycles(g: DiGraph, arcs: Iterable[int]) -> tuple[tuple[int, ...], ...]:
    """Split an arc set with in/out degree <= 1 into directed cycles.

    Each cycle is listed in traversal order starting at its lowest-index
    node. Raises ``ValueError`` if the arcs do not form disjoint cycles.
    """
    succ: dict[int, int] = {}
    for a in arcs:
        t = g.arcs[a][0]
        if t in succ:
            raise ValueError(f"node {t} has two selected outgoing arcs")
        succ[t] = a
    heads = [g.arcs[a][1] for a in succ.values()]
    if len(set(heads)) != len(heads):
        raise ValueError("some node has two selected incoming arcs")
    cycles = []
    visited = set()
    for start in sorted(succ):
        if start in visited:
            continue
        cyc = []
        node = start
        while node not in visited:
            if node not in succ:
                raise ValueError("selected arcs contain an open path")
            visited.add(node)
            a = succ[node]
            cyc.append(a)
            node = g.arcs[a][1]
        if node != start:
            raise ValueError("selected arcs contain an open path")
        cycles.append(tuple(cyc))
    return tuple(cycles)


def make_cover(g: DiGraph, arcs: Iterable[int]) -> CycleCover:
    arcs = tuple(sorted(int(a) for a in arcs))
    cover = CycleCover(arcs, decompose_cycles(g, arcs))
    if not is_cycle_cover(g, cover.indicator(g.m)):
        raise ValueError("arc set is not a cycle cover")
    return cover


def is_cycle_cover(g: DiGraph, x: np.ndarray) -> bool:
    """Check ``x`` is 0/1 with ``Ux = Vx = 1``."""
    x = np.asarray(x)
    if x.shape != (g.m,) or not np.all((x == 0) | (x == 1)):
        return False
    out_deg = np.bincount(g.tails, weights=x, minlength=g.n)
    in_deg = np.bincount(g.heads, weights=x, minlength=g.n)
    return bool(np.all(out_deg == 1) and np.all(in_deg == 1))


# --- bipartite matching ----------------------------------------------------


def _augment(g: DiGraph, root: int, mate_left, mate_right, banned_left=-1, banned_right=-1) -> bool:
    """Search an augmenting path from free left node ``root`` (iterative DFS).

    ``mate_left[i]``/``mate_right[j]`` hold the matched arc or -1. On success
    the matching is flipped along the path in place.
    """
    parent_arc = {}
    visited_right = set()
    stack = [(root, iter(g.out_adj[root]))]
    while stack:
        i, it = stack[-1]
        advanced = False
        for a in it:
            j = g.arcs[a][1]
            if j == banned_right or j in visited_right:
                continue
            visited_right.add(j)
            parent_arc[j] = a
            b = mate_right[j]
            if b < 0:
                # flip along the path back to root
                while True:
                    a = parent_arc[j]
                    i = g.arcs[a][0]
                    prev = mate_left[i]
                    mate_left[i] = a
                    mate_right[j] = a
                    if i == root:
                        return True
                    j = g.arcs[prev][1]
            nxt = g.arcs[b][0]
            if nxt == banned_left:
                continue
            stack.append((nxt, iter(g.out_adj[nxt])))
            advanced = True
            break
        if not advanced:
            stack.pop()
    return False


def max_matching(g: DiGraph) -> tuple[list[int], list[int]]:
    """Maximum matching of B(G) by repeated augmenting paths.

    Returns ``(mate_left, mate_right)`` with the matched arc per tail/head
    node, or -1 where unmatched.
    """
    mate_left = [-1] * g.n
    mate_right = [-1] * g.n
    # greedy start
    for i in range(g.n):
        for a in g.out_adj[i]:
            j = g.arcs[a][1]
            if mate_right[j] < 0:
                mate_left[i] = a
                mate_right[j] = a
                break
    for i in range(g.n):
        if mate_left[i] < 0:
            _augment(g, i, mate_left, mate_right)
    return mate_left, mate_right


def find_cycle_cover(g: DiGraph) -> CycleCover:
    """Return some cycle cover of ``g`` or raise :class:`InstanceInfeasible`."""
    mate_left, _ = max_matching(g)
    if any(a < 0 for a in mate_left):
        raise InstanceInfeasible("graph has no cycle cover (no perfect matching in B(G))")
    return make_cover(g, mate_left)


def never_used_arcs(g: DiGraph) -> set[int]:
    """Arcs that belong to no cycle cover.

    For each arc ``f = (i, j)`` outside a reference perfect matching, ``f`` is
    forced into the matching and one augmenting path is sought for the rest.
    """
    mate_left, mate_right = max_matching(g)
    if any(a < 0 for a in mate_left):
        raise InstanceInfeasible("graph has no cycle cover (no perfect matching in B(G))")
    unused = set()
    for f, (i, j) in enumerate(g.arcs):
        if mate_left[i] == f:
            continue
        ml = list(mate_left)
        mr = list(mate_right)
        a, b = ml[i], mr[j]
        free_left = g.arcs[b][0]
        ml[free_left] = -1
        mr[g.arcs[a][1]] = -1
        ml[i] = f
        mr[j] = f
        if not _augment(g, free_left, ml, mr, banned_left=i, banned_right=j):
            unused.add(f)
    return unused


def enumerate_cycle_covers(g: DiGraph, limit: int = 100_000) -> list[CycleCover]:
    """All cycle covers, in lexicographic order of successor arc per node."""
    covers = []
    chosen = [-1] * g.n
    used_heads = [False] * g.n

    def rec(i):
        if i == g.n:
            if len(covers) >= limit:
                raise LimitExceeded(f"more than {limit} cycle covers")
            covers.append(make_cover(g, chosen))
            return
        for a in g.out_adj[i]:
            j = g.arcs[a][1]
            if used_heads[j]:
                continue
            used_heads[j] = True
            chosen[i] = a
            rec(i + 1)
            used_heads[j] = False
        chosen[i] = -1

    rec(0)
    return covers


@dataclass(frozen=True)
class BipartiteRep:
    """B(G): left copy of nodes (tails), right copy (heads), one edge per arc.

    Vertex ids are ``i`` for left node ``i`` and ``n + j`` for right node ``j``;
    edge ``a`` joins ``tail(a)`` and ``n + head(a)``.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    component_count: int
    component: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.edges)


def bipartite_rep(g: DiGraph) -> BipartiteRep:
    nv = 2 * g.n
    adj: list[list[int]] = [[] for _ in range(nv)]
    edges = []
    for a, (t, h) in enumerate(g.arcs):
        u, v = t, g.n + h
        edges.append((u, v))
        adj[u].append(v)
        adj[v].append(u)
    comp = [-1] * nv
    count = 0
    for s in range(nv):
        if comp[s] >= 0:
            continue
        comp[s] = count
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if comp[v] < 0:
                    comp[v] = count
                    queue.append(v)
        count += 1
    return BipartiteRep(g.n, tuple(edges), count, tuple(comp))
