"""Facial reduction: a basis of the minimal face for the lifted cycle-cover SDP.

The lifted vectors ``(1, x)`` of all cycle covers span the null space of
``[-1 U; -1 V]``. A basis is built from one cycle cover ``x_bar`` together with
the signed characteristic vectors of the fundamental cycles of a spanning
forest of B(G): alternating +1/-1 along an even cycle of B(G) keeps every
node's in- and out-sum at zero.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient
from .graph import DiGraph, bipartite_rep, find_cycle_cover


@dataclass(frozen=True)
class Basis:
    W: np.ndarray
    alpha: int
    orthonormal: bool
    # integer columns (1, x_bar) and (0, w^e) before orthonormalization
    W_int: np.ndarray
    x_bar: np.ndarray
    cat_vectors: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.W.shape[1]


def compute_alpha(g: DiGraph) -> int:
    """Rank of ``[U; V]``: twice the node count minus the components of B(G)."""
    return 2 * g.n - bipartite_rep(g).component_count


def _spanning_forest(g: DiGraph):
    """BFS forest of B(G) from the lowest unvisited vertex.

    Returns parent vertex, parent edge (arc index) and depth per vertex, and
    the set of tree edges.
    """
    nv = 2 * g.n
    adj: list[list[tuple[int, int]]] = [[] for _ in range(nv)]
    for a, (t, h) in enumerate(g.arcs):
        adj[t].append((g.n + h, a))
        adj[g.n + h].append((t, a))
    parent = [-1] * nv
    parent_edge = [-1] * nv
    depth = [-1] * nv
    tree = set()
    for s in range(nv):
        if depth[s] >= 0:
            continue
        depth[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v, a in adj[u]:
                if depth[v] < 0:
                    depth[v] = depth[u] + 1
                    parent[v] = u
                    parent_edge[v] = a
                    tree.add(a)
                    queue.append(v)
    return parent, parent_edge, depth, tree


def cat_basis(g: DiGraph) -> list[np.ndarray]:
    """Signed cycle vectors, one per non-tree edge of a spanning forest of B(G).

    Each vector is +1 on the non-tree arc and alternates sign along the
    closing tree path, so that ``U w = V w = 0``.
    """
    parent, parent_edge, depth, tree = _spanning_forest(g)
    vectors = []
    for a, (t, h) in enumerate(g.arcs):
        if a in tree:
            continue
        u, v = t, g.n + h
        # walk both ends up to the common ancestor
        up_u, up_v = [], []
        while u != v:
            if depth[u] >= depth[v]:
                up_u.append(parent_edge[u])
                u = parent[u]
            else:
                up_v.append(parent_edge[v])
                v = parent[v]
        # cycle: a, then path from head side up to ancestor, then down to tail
        cycle = [a] + up_v + up_u[::-1]
        w = np.zeros(g.m, dtype=np.int64)
        for k, b in enumerate(cycle):
            w[b] = 1 if k % 2 == 0 else -1
        vectors.append(w)
    return vectors


def build_W(g: DiGraph) -> Basis:
    """Integer basis with columns ``(1, x_bar)`` and ``(0, w)`` for each cycle vector."""
    x_bar = find_cycle_cover(g).indicator(g.m).astype(np.int64)
    cats = cat_basis(g)
    cols = [np.concatenate(([1], x_bar))] + [np.concatenate(([0], w)) for w in cats]
    W_int = np.stack(cols, axis=1)
    alpha = compute_alpha(g)
    if W_int.shape[1] != g.m + 1 - alpha:
        raise RankDeficient(f"expected {g.m + 1 - alpha} columns, built {W_int.shape[1]}")
    return Basis(W_int.astype(float), alpha, False, W_int, x_bar, tuple(cats))


def orthonormalize(b: Basis, tol: float = 1e-9) -> Basis:
    """Orthonormal basis of the same column space via Householder QR."""
    Qm, R = np.linalg.qr(b.W_int.astype(float), mode="reduced")
    diag = np.abs(np.diag(R))
    if diag.size and diag.min() <= tol * max(1.0, diag.max()):
        raise RankDeficient(f"numerical rank below {b.W_int.shape[1]}")
    return Basis(Qm, b.alpha, True, b.W_int, b.x_bar, b.cat_vectors)


def face_basis(g: DiGraph) -> Basis:
    return orthonormalize(build_W(g))


def constraint_matrix(g: DiGraph) -> np.ndarray:
    """``[-1 U; -1 V]`` as an integer matrix (2n x (m+1))."""
    U, V = g.incidence()
    ones = -np.ones((g.n, 1), dtype=np.int64)
    return np.vstack([np.hstack([ones, U]), np.hstack([ones, V])])


def dumps_basis(b: Basis) -> str:
    """Sparse text dump: ``alpha``, then one line per column of ``index:value``
    pairs (index 0 is the extended coordinate, arcs are 1-based)."""
    lines = [f"alpha {b.alpha}", f"columns {b.W_int.shape[1]}"]
    for j in range(b.W_int.shape[1]):
        col = b.W_int[:, j]
        nz = np.nonzero(col)[0]
        lines.append(" ".join(f"{i}:{int(col[i]):+d}" for i in nz))
    return "\n".join(lines) + "\n"
