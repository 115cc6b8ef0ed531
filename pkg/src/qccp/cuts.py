"""Triangle-cut separation and clustering of cuts into non-overlapping groups.

A cut ``(e, f, g)`` stands for ``X_ef + X_eg <= X_ee + X_fg``; it is symmetric
in ``f`` and ``g`` so triples are stored with ``f < g``. Cuts whose arc sets are
disjoint touch disjoint matrix entries and can be projected simultaneously,
so the pool is split into clusters by coloring the overlap graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VIOLATION_TOL = 1e-6


@dataclass(frozen=True, order=True)
class TriangleCut:
    e: int
    f: int
    g: int

    def __post_init__(self):
        if len({self.e, self.f, self.g}) != 3:
            raise ValueError(f"cut arcs must be distinct, got {(self.e, self.f, self.g)}")
        if self.f > self.g:
            f, g = self.g, self.f
            object.__setattr__(self, "f", f)
            object.__setattr__(self, "g", g)

    @property
    def arcs(self) -> frozenset[int]:
        return frozenset((self.e, self.f, self.g))

    def violation(self, Y: np.ndarray) -> float:
        e, f, g = self.e + 1, self.f + 1, self.g + 1
        return float(Y[e, f] + Y[e, g] - Y[e, e] - Y[f, g])


@dataclass
class CutPool:
    cuts: list[TriangleCut] = field(default_factory=list)
    clusters: list[list[int]] = field(default_factory=list)

    def __len__(self):
        return len(self.cuts)

    def __contains__(self, cut):
        return cut in set(self.cuts)

    def add(self, new_cuts) -> None:
        """Append cuts (skipping duplicates); clustering must be redone."""
        seen = set(self.cuts)
        for c in new_cuts:
            if c not in seen:
                self.cuts.append(c)
                seen.add(c)
        self.clusters = []

    def conflict_edges(self) -> list[tuple[int, int]]:
        by_arc: dict[int, list[int]] = {}
        for k, c in enumerate(self.cuts):
            for a in (c.e, c.f, c.g):
                by_arc.setdefault(a, []).append(k)
        edges = set()
        for members in by_arc.values():
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    edges.add((members[i], members[j]))
        return sorted(edges)

    def is_proper(self) -> bool:
        """Clusters partition the cuts and no cluster holds two overlapping cuts."""
        flat = sorted(k for cl in self.clusters for k in cl)
        if flat != list(range(len(self.cuts))):
            return False
        for cl in self.clusters:
            used = set()
            for k in cl:
                arcs = self.cuts[k].arcs
                if used & arcs:
                    return False
                used |= arcs
        return True

    def cluster_arrays(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Per cluster, matrix indices (arc + 1) of ``e``, ``f``, ``g``."""
        out = []
        for cl in self.clusters:
            idx = np.array([[self.cuts[k].e, self.cuts[k].f, self.cuts[k].g] for k in cl], dtype=np.int64) + 1
            out.append((idx[:, 0], idx[:, 1], idx[:, 2]))
        return out

    def copy(self) -> CutPool:
        return CutPool(list(self.cuts), [list(c) for c in self.clusters])


def separate(Y: np.ndarray, num_cuts: int, excluded=(), tol: float = VIOLATION_TOL) -> list[TriangleCut]:
    """The ``num_cuts`` most violated triangle cuts of ``Y`` not in ``excluded``.

    Ties are broken by the lexicographic triple.
    """
    X = np.asarray(Y)[1:, 1:]
    m = X.shape[0]
    if m < 3 or num_cuts <= 0:
        return []
    excluded = set(excluded)
    keep = num_cuts + len(excluded)
    iu, ju = np.triu_indices(m, k=1)
    cand_v, cand_e, cand_f, cand_g = [], [], [], []
    for e in range(m):
        row = X[e]
        v = row[iu] + row[ju] - X[e, e] - X[iu, ju]
        ok = (v > tol) & (iu != e) & (ju != e)
        if not np.any(ok):
            continue
        sel = np.nonzero(ok)[0]
        if sel.size > keep:
            part = np.argpartition(-v[sel], keep - 1)[:keep]
            # keep everything tied with the cutoff so tie-breaking stays lexicographic
            cutoff = v[sel][part].min()
            sel = sel[v[sel] >= cutoff]
        cand_v.append(v[sel])
        cand_e.append(np.full(sel.size, e))
        cand_f.append(iu[sel])
        cand_g.append(ju[sel])
    if not cand_v:
        return []
    v = np.concatenate(cand_v)
    e = np.concatenate(cand_e)
    f = np.concatenate(cand_f)
    g = np.concatenate(cand_g)
    order = np.lexsort((g, f, e, -v))
    out = []
    for k in order:
        c = TriangleCut(int(e[k]), int(f[k]), int(g[k]))
        if c in excluded:
            continue
        out.append(c)
        if len(out) == num_cuts:
            break
    return out


# --- coloring ----------------------------------------------------------------


def _adjacency(n: int, edges) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    return adj


def dsatur(n: int, adj: list[list[int]]) -> np.ndarray:
    """Greedy coloring choosing the vertex of highest saturation next."""
    colors = np.full(n, -1, dtype=np.int64)
    sat: list[set[int]] = [set() for _ in range(n)]
    deg = [len(a) for a in adj]
    for _ in range(n):
        v = max((u for u in range(n) if colors[u] < 0), key=lambda u: (len(sat[u]), deg[u], -u))
        c = 0
        while c in sat[v]:
            c += 1
        colors[v] = c
        for u in adj[v]:
            sat[u].add(c)
    return colors


def tabucol(n: int, adj: list[list[int]], k: int, init: np.ndarray, rng: np.random.Generator,
            max_iter: int = 10_000) -> np.ndarray | None:
    """Tabu search for a proper ``k``-coloring starting from ``init``.

    Returns the coloring or ``None`` when the iteration budget runs out.
    """
    colors = np.array(init, dtype=np.int64)
    over = colors >= k
    colors[over] = rng.integers(0, k, size=int(over.sum()))
    if k < 2:
        ok = all(colors[u] != colors[v] for v in range(n) for u in adj[v])
        return colors if ok else None
    from ._kernels import tabu_search

    nbr_ptr = np.zeros(n + 1, dtype=np.int64)
    nbr_ptr[1:] = np.cumsum([len(a) for a in adj])
    nbr_idx = np.array([u for a in adj for u in a], dtype=np.int64)
    noise = rng.integers(0, 10, size=max_iter)
    pick = rng.random((max_iter, 2))
    ok = tabu_search(colors, nbr_ptr, nbr_idx, k, noise, pick, max_iter)
    return colors if ok else None


def cluster(pool: CutPool, seed: int = 0, max_iter: int = 10_000) -> CutPool:
    """Partition the pool into clusters of pairwise disjoint cuts.

    DSATUR gives a first coloring; Tabucol then tries one color fewer until it
    fails within its budget.
    """
    n = len(pool.cuts)
    if n == 0:
        return CutPool([], [])
    adj = _adjacency(n, pool.conflict_edges())
    colors = dsatur(n, adj)
    k = int(colors.max()) + 1
    rng = np.random.default_rng(seed)
    while k > 1:
        trial = tabucol(n, adj, k - 1, colors, rng, max_iter)
        if trial is None:
            break
        colors = trial
        k -= 1
    # relabel colors by first appearance for a stable cluster order
    labels = {}
    clusters: list[list[int]] = []
    for idx in range(n):
        c = int(colors[idx])
        if c not in labels:
            labels[c] = len(clusters)
            clusters.append([])
        clusters[labels[c]].append(idx)
    out = CutPool(list(pool.cuts), clusters)
    assert out.is_proper()
    return out
